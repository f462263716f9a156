#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace acgm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Flat parameter storage is row-major so checkpoints read naturally.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CyclicGraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic 64-bit generator (splitmix64 seeding + xoshiro256**).
// The conversions below are fixed here rather than delegated to
// <random> distributions so that runs replay bit-exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // uniform double in [0, 1)
  double uniform();
  // uniform double in [lo, hi)
  double uniform(double lo, double hi);
  // uniform integer in [0, n)
  int uniform_int(int n);

  // Independent stream derived from this one's seed and a stream tag.
  Rng fork(std::uint64_t stream) const;

 private:
  std::uint64_t state_[4];
  std::uint64_t seed_;
};

}  // namespace acgm
