#pragma once

#include "acgm/common.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace acgm {

// One named flat tensor with a gradient slot of identical shape.
struct Tensor {
  std::vector<int> shape;
  Vector value;
  Vector grad;

  int size() const { return static_cast<int>(value.size()); }
  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }

  Eigen::Map<RowMatrix> mat() {
    return Eigen::Map<RowMatrix>(value.data(), rows(), cols());
  }
  Eigen::Map<const RowMatrix> mat() const {
    return Eigen::Map<const RowMatrix>(value.data(), rows(), cols());
  }
  Eigen::Map<RowMatrix> gmat() {
    return Eigen::Map<RowMatrix>(grad.data(), rows(), cols());
  }
  Eigen::Map<Vector> vec() { return Eigen::Map<Vector>(value.data(), size()); }
  Eigen::Map<const Vector> vec() const {
    return Eigen::Map<const Vector>(value.data(), size());
  }
  Eigen::Map<Vector> gvec() { return Eigen::Map<Vector>(grad.data(), size()); }
};

// Named tensors with matching gradient accumulators. Iteration order is the
// lexicographic name order, which keeps checkpoints and optimizer sweeps
// deterministic.
class ParamStore {
 public:
  // Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
  Tensor& add(const std::string& name, std::vector<int> shape, int fan_in, Rng& rng);
  Tensor& add_zeros(const std::string& name, std::vector<int> shape);

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool has(const std::string& name) const { return tensors_.count(name) > 0; }

  std::vector<std::string> names() const;
  std::size_t count() const { return tensors_.size(); }
  int total_size() const;

  void zero_grads();
  bool values_finite() const;
  bool grads_finite() const;

  // Copies values (not grads) for every matching name; shapes must agree.
  void copy_values_from(const ParamStore& other);

  // Flattened views in name order, used by gradient checks.
  Vector flat_values() const;
  void set_flat_values(const Vector& v);
  Vector flat_grads() const;

  template <typename F>
  void for_each(F&& f) {
    for (auto& [name, t] : tensors_) f(name, t);
  }
  template <typename F>
  void for_each(F&& f) const {
    for (const auto& [name, t] : tensors_) f(name, t);
  }

 private:
  std::map<std::string, Tensor> tensors_;
};

enum class Act { Linear, Relu, Tanh, Elu };

Vector apply_activation(const Vector& z, Act act);
// Elementwise derivative given pre-activation z.
Vector activation_deriv(const Vector& z, Act act);

// y = act(W x + b)
struct DenseCache {
  Vector x, z;
};

struct DenseLayer {
  Tensor* w = nullptr;  // [out, in]
  Tensor* b = nullptr;  // [out]
  Act act = Act::Linear;

  static DenseLayer create(ParamStore& ps, const std::string& prefix, int in,
                           int out, Act act, Rng& rng);
  static DenseLayer attach(ParamStore& ps, const std::string& prefix, Act act);

  int in_dim() const { return w->cols(); }
  int out_dim() const { return w->rows(); }

  Vector forward(const Vector& x, DenseCache* cache = nullptr) const;
  // Accumulates parameter grads; returns dL/dx.
  Vector backward(const DenseCache& cache, const Vector& dy) const;
};

// Gated recurrent cell, h' = (1 - z) o n + z o h with
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   n = tanh(Wn x + Un (r o h) + bn)
struct GruCache {
  Vector x, h, z, r, n;
};

struct GruCell {
  Tensor *wz = nullptr, *uz = nullptr, *bz = nullptr;
  Tensor *wr = nullptr, *ur = nullptr, *br = nullptr;
  Tensor *wn = nullptr, *un = nullptr, *bn = nullptr;

  static GruCell create(ParamStore& ps, const std::string& prefix, int in,
                        int hidden, Rng& rng);
  static GruCell attach(ParamStore& ps, const std::string& prefix);

  int hidden_dim() const { return wz->rows(); }
  int in_dim() const { return wz->cols(); }

  Vector step(const Vector& x, const Vector& h, GruCache* cache = nullptr) const;
  // Returns (dL/dx, dL/dh) and accumulates parameter grads.
  std::pair<Vector, Vector> backward(const GruCache& cache, const Vector& dh_out) const;
};

// Row-stochastic attention over the other agents:
// a(i,j) = softmax_{j != i}((h_i P)(h_j P)^T / sqrt(latent)); a(i,i) = 0.
struct AttentionCache {
  RowMatrix h;       // input rows
  RowMatrix p;       // projected rows
  Matrix coeff;      // the output coefficients
};

Matrix attention_coefficients(const RowMatrix& h, const Tensor& proj,
                              AttentionCache* cache = nullptr);
// Accumulates grads into proj; returns dL/dH for this head.
RowMatrix attention_coefficients_backward(const AttentionCache& cache,
                                          const Matrix& dcoeff, Tensor& proj);

// h'_i = act((1/M) sum_m sum_{j != i} a_m(i,j) W_m h_j)
struct MultiHeadCache {
  RowMatrix h;
  std::vector<Matrix> coeff;     // per head
  std::vector<RowMatrix> vals;   // per head: H W_m^T
  RowMatrix pre;                 // pre-activation
};

RowMatrix multi_head_aggregate(const RowMatrix& h,
                               const std::vector<Matrix>& coeff,
                               const std::vector<Tensor*>& head_weights,
                               Act act, MultiHeadCache* cache = nullptr);
// Accumulates grads into head weights; emits per-head dcoeff and returns the
// direct dL/dH term (the path through the values, not the coefficients).
RowMatrix multi_head_aggregate_backward(const MultiHeadCache& cache,
                                        const RowMatrix& dout,
                                        const std::vector<Tensor*>& head_weights,
                                        Act act,
                                        std::vector<Matrix>* dcoeff);

// sigmoid(u^T tanh(Wl hl + Wr hr))
struct PairScoreCache {
  Vector hl, hr, t, s;  // t = tanh(...), s = scalar score (size 1)
};

double pairwise_decoder_score(const Vector& hl, const Vector& hr,
                              const Tensor& wl, const Tensor& wr,
                              const Tensor& u, PairScoreCache* cache = nullptr);
// Accumulates grads into wl/wr/u; returns (dL/dhl, dL/dhr).
std::pair<Vector, Vector> pairwise_decoder_score_backward(
    const PairScoreCache& cache, double dscore, Tensor& wl, Tensor& wr,
    Tensor& u);

// RMSProp: v <- a v + (1-a) g^2; p <- p - lr g / (sqrt(v) + 1e-8).
class RmsProp {
 public:
  RmsProp(double lr = 5e-4, double alpha = 0.99) : lr_(lr), alpha_(alpha) {}

  // Applies one step over every tensor and zeroes the grads. Throws
  // NumericError if any gradient is non-finite (params left untouched).
  void step(ParamStore& ps);

  double lr() const { return lr_; }

 private:
  double lr_;
  double alpha_;
  double eps_ = 1e-8;
  std::map<std::string, Vector> second_moment_;
};

// Categorical distribution over a finite action set.
void validate_categorical(const Vector& probs);
int sample_categorical(const Vector& probs, Rng& rng);
double categorical_log_prob(const Vector& probs, int action);
int argmax_action(const Vector& probs);

Vector softmax(const Vector& logits);

}  // namespace acgm
