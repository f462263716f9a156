#include "acgm/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace acgm {

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw FormatError("checkpoint: truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

float get_f32(std::istream& is) {
  const std::uint32_t bits = get_u32(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void Checkpoint::add_store(const ParamStore& ps) {
  ps.for_each([&](const std::string& name, const Tensor& t) {
    Entry e;
    e.name = name;
    e.shape = t.shape;
    e.data.resize(t.size());
    for (int i = 0; i < t.size(); ++i) e.data[i] = static_cast<float>(t.value[i]);
    tensors.push_back(std::move(e));
  });
}

void Checkpoint::load_into(ParamStore& ps) const {
  ps.for_each([&](const std::string& name, Tensor& t) {
    const Entry* found = nullptr;
    for (const Entry& e : tensors) {
      if (e.name == name) {
        found = &e;
        break;
      }
    }
    if (!found) throw FormatError("checkpoint: missing tensor " + name);
    if (found->shape != t.shape) {
      throw FormatError("checkpoint: shape mismatch for " + name);
    }
    for (int i = 0; i < t.size(); ++i) t.value[i] = static_cast<double>(found->data[i]);
  });
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("checkpoint: cannot open " + tmp + " for writing");
    os.write("ACGM", 4);
    put_u32(os, kCheckpointVersion);
    for (const auto& e : ckpt.tensors) {
      if (e.name.empty()) throw FormatError("checkpoint: tensor names must be nonempty");
      put_u32(os, static_cast<std::uint32_t>(e.name.size()));
      os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
      put_u32(os, static_cast<std::uint32_t>(e.shape.size()));
      std::size_t n = 1;
      for (int dim : e.shape) {
        put_u32(os, static_cast<std::uint32_t>(dim));
        n *= static_cast<std::size_t>(dim);
      }
      if (n != e.data.size()) throw FormatError("checkpoint: data size mismatch");
      for (float v : e.data) put_f32(os, v);
    }
    put_u32(os, 0);  // end of tensor records
    put_u32(os, static_cast<std::uint32_t>(ckpt.config_echo.size()));
    os.write(ckpt.config_echo.data(),
             static_cast<std::streamsize>(ckpt.config_echo.size()));
    if (!os) throw FormatError("checkpoint: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "ACGM", 4) != 0) {
    throw FormatError("checkpoint: bad magic in " + path);
  }
  const std::uint32_t version = get_u32(is);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported format version " + std::to_string(version));
  }
  Checkpoint ckpt;
  for (;;) {
    const std::uint32_t name_len = get_u32(is);
    if (name_len == 0) break;
    Checkpoint::Entry e;
    e.name.resize(name_len);
    is.read(e.name.data(), name_len);
    const std::uint32_t rank = get_u32(is);
    if (rank > 8) throw FormatError("checkpoint: implausible tensor rank");
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint32_t dim = get_u32(is);
      e.shape.push_back(static_cast<int>(dim));
      n *= dim;
    }
    e.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) e.data[i] = get_f32(is);
    if (!is) throw FormatError("checkpoint: truncated tensor data");
    ckpt.tensors.push_back(std::move(e));
  }
  const std::uint32_t cfg_len = get_u32(is);
  ckpt.config_echo.resize(cfg_len);
  is.read(ckpt.config_echo.data(), cfg_len);
  if (!is) throw FormatError("checkpoint: truncated config echo");
  return ckpt;
}

}  // namespace acgm
