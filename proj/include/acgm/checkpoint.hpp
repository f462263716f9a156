#pragma once

#include "acgm/common.hpp"
#include "acgm/tinynet.hpp"

#include <string>
#include <vector>

namespace acgm {

// Checkpoint file layout, little-endian throughout:
//   magic "ACGM", format version u32,
//   tensor records <name-length u32, name bytes, rank u32, dims u32 x rank,
//                   data f32 x prod(dims)>,
//   a terminating record with name-length 0,
//   config echo <length u32, bytes>.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  struct Entry {
    std::string name;
    std::vector<int> shape;
    std::vector<float> data;
  };
  std::vector<Entry> tensors;
  std::string config_echo;

  void add_store(const ParamStore& ps);
  // Copies values into matching tensors; every store tensor must be present
  // with an identical shape.
  void load_into(ParamStore& ps) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace acgm
