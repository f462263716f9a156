#include "acgm/tinynet.hpp"

#include <cmath>
#include <numeric>

namespace acgm {

namespace {

int shape_size(const std::vector<int>& shape) {
  int n = 1;
  for (int s : shape) {
    if (s <= 0) throw ArgumentError("tensor shape entries must be positive");
    n *= s;
  }
  return n;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor& ParamStore::add(const std::string& name, std::vector<int> shape,
                        int fan_in, Rng& rng) {
  if (tensors_.count(name)) throw ArgumentError("duplicate tensor name: " + name);
  if (fan_in < 1) throw ArgumentError("fan_in must be positive");
  Tensor t;
  t.shape = std::move(shape);
  const int n = shape_size(t.shape);
  t.value.resize(n);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (int i = 0; i < n; ++i) t.value[i] = rng.uniform(-bound, bound);
  t.grad = Vector::Zero(n);
  return tensors_.emplace(name, std::move(t)).first->second;
}

Tensor& ParamStore::add_zeros(const std::string& name, std::vector<int> shape) {
  if (tensors_.count(name)) throw ArgumentError("duplicate tensor name: " + name);
  Tensor t;
  t.shape = std::move(shape);
  const int n = shape_size(t.shape);
  t.value = Vector::Zero(n);
  t.grad = Vector::Zero(n);
  return tensors_.emplace(name, std::move(t)).first->second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ArgumentError("no such tensor: " + name);
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ArgumentError("no such tensor: " + name);
  return it->second;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, _] : tensors_) out.push_back(name);
  return out;
}

int ParamStore::total_size() const {
  int n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [_, t] : tensors_) t.grad.setZero();
}

bool ParamStore::values_finite() const {
  for (const auto& [_, t] : tensors_) {
    if (!t.value.allFinite()) return false;
  }
  return true;
}

bool ParamStore::grads_finite() const {
  for (const auto& [_, t] : tensors_) {
    if (!t.grad.allFinite()) return false;
  }
  return true;
}

void ParamStore::copy_values_from(const ParamStore& other) {
  for (auto& [name, t] : tensors_) {
    const Tensor& src = other.at(name);
    if (src.shape != t.shape) {
      throw DimensionError("copy_values_from: shape mismatch for " + name);
    }
    t.value = src.value;
  }
}

Vector ParamStore::flat_values() const {
  Vector out(total_size());
  int off = 0;
  for (const auto& [_, t] : tensors_) {
    out.segment(off, t.size()) = t.value;
    off += t.size();
  }
  return out;
}

void ParamStore::set_flat_values(const Vector& v) {
  if (v.size() != total_size()) throw DimensionError("set_flat_values: size mismatch");
  int off = 0;
  for (auto& [_, t] : tensors_) {
    t.value = v.segment(off, t.size());
    off += t.size();
  }
}

Vector ParamStore::flat_grads() const {
  Vector out(total_size());
  int off = 0;
  for (const auto& [_, t] : tensors_) {
    out.segment(off, t.size()) = t.grad;
    off += t.size();
  }
  return out;
}

Vector apply_activation(const Vector& z, Act act) {
  switch (act) {
    case Act::Linear:
      return z;
    case Act::Relu:
      return z.cwiseMax(0.0);
    case Act::Tanh:
      return z.array().tanh().matrix();
    case Act::Elu:
      return z.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
  }
  throw ArgumentError("unknown activation");
}

Vector activation_deriv(const Vector& z, Act act) {
  switch (act) {
    case Act::Linear:
      return Vector::Ones(z.size());
    case Act::Relu:
      return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Act::Tanh: {
      Vector t = z.array().tanh().matrix();
      return (1.0 - t.array().square()).matrix();
    }
    case Act::Elu:
      return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); });
  }
  throw ArgumentError("unknown activation");
}

DenseLayer DenseLayer::create(ParamStore& ps, const std::string& prefix, int in,
                              int out, Act act, Rng& rng) {
  DenseLayer layer;
  layer.w = &ps.add(prefix + ".w", {out, in}, in, rng);
  layer.b = &ps.add(prefix + ".b", {out, 1}, in, rng);
  layer.act = act;
  return layer;
}

DenseLayer DenseLayer::attach(ParamStore& ps, const std::string& prefix, Act act) {
  DenseLayer layer;
  layer.w = &ps.at(prefix + ".w");
  layer.b = &ps.at(prefix + ".b");
  layer.act = act;
  return layer;
}

Vector DenseLayer::forward(const Vector& x, DenseCache* cache) const {
  if (x.size() != w->cols()) throw DimensionError("dense: input width mismatch");
  Vector z = w->mat() * x + b->vec();
  if (cache) {
    cache->x = x;
    cache->z = z;
  }
  return apply_activation(z, act);
}

Vector DenseLayer::backward(const DenseCache& cache, const Vector& dy) const {
  if (dy.size() != w->rows()) throw DimensionError("dense backward: dy width mismatch");
  const Vector dz = dy.cwiseProduct(activation_deriv(cache.z, act));
  w->gmat().noalias() += dz * cache.x.transpose();
  b->gvec() += dz;
  return w->mat().transpose() * dz;
}

GruCell GruCell::create(ParamStore& ps, const std::string& prefix, int in,
                        int hidden, Rng& rng) {
  GruCell cell;
  cell.wz = &ps.add(prefix + ".wz", {hidden, in}, in, rng);
  cell.uz = &ps.add(prefix + ".uz", {hidden, hidden}, hidden, rng);
  cell.bz = &ps.add(prefix + ".bz", {hidden, 1}, hidden, rng);
  cell.wr = &ps.add(prefix + ".wr", {hidden, in}, in, rng);
  cell.ur = &ps.add(prefix + ".ur", {hidden, hidden}, hidden, rng);
  cell.br = &ps.add(prefix + ".br", {hidden, 1}, hidden, rng);
  cell.wn = &ps.add(prefix + ".wn", {hidden, in}, in, rng);
  cell.un = &ps.add(prefix + ".un", {hidden, hidden}, hidden, rng);
  cell.bn = &ps.add(prefix + ".bn", {hidden, 1}, hidden, rng);
  return cell;
}

GruCell GruCell::attach(ParamStore& ps, const std::string& prefix) {
  GruCell cell;
  cell.wz = &ps.at(prefix + ".wz");
  cell.uz = &ps.at(prefix + ".uz");
  cell.bz = &ps.at(prefix + ".bz");
  cell.wr = &ps.at(prefix + ".wr");
  cell.ur = &ps.at(prefix + ".ur");
  cell.br = &ps.at(prefix + ".br");
  cell.wn = &ps.at(prefix + ".wn");
  cell.un = &ps.at(prefix + ".un");
  cell.bn = &ps.at(prefix + ".bn");
  return cell;
}

Vector GruCell::step(const Vector& x, const Vector& h, GruCache* cache) const {
  if (x.size() != in_dim() || h.size() != hidden_dim()) {
    throw DimensionError("gru: input/hidden width mismatch");
  }
  const Vector z =
      (wz->mat() * x + uz->mat() * h + bz->vec()).unaryExpr([](double v) { return sigmoid(v); });
  const Vector r =
      (wr->mat() * x + ur->mat() * h + br->vec()).unaryExpr([](double v) { return sigmoid(v); });
  const Vector n =
      (wn->mat() * x + un->mat() * h.cwiseProduct(r) + bn->vec()).array().tanh().matrix();
  Vector h_next = (Vector::Ones(h.size()) - z).cwiseProduct(n) + z.cwiseProduct(h);
  if (cache) {
    cache->x = x;
    cache->h = h;
    cache->z = z;
    cache->r = r;
    cache->n = n;
  }
  return h_next;
}

std::pair<Vector, Vector> GruCell::backward(const GruCache& cache,
                                            const Vector& dh_out) const {
  const Vector& x = cache.x;
  const Vector& h = cache.h;
  const Vector& z = cache.z;
  const Vector& r = cache.r;
  const Vector& n = cache.n;

  const Vector dn = dh_out.cwiseProduct(Vector::Ones(z.size()) - z);
  const Vector dz = dh_out.cwiseProduct(h - n);
  Vector dh = dh_out.cwiseProduct(z);

  const Vector dan = dn.cwiseProduct((1.0 - n.array().square()).matrix());
  wn->gmat().noalias() += dan * x.transpose();
  bn->gvec() += dan;
  const Vector rh = r.cwiseProduct(h);
  un->gmat().noalias() += dan * rh.transpose();
  const Vector drh = un->mat().transpose() * dan;
  const Vector dr = drh.cwiseProduct(h);
  dh += drh.cwiseProduct(r);

  const Vector dar = dr.cwiseProduct(r.cwiseProduct(Vector::Ones(r.size()) - r));
  wr->gmat().noalias() += dar * x.transpose();
  br->gvec() += dar;
  ur->gmat().noalias() += dar * h.transpose();
  dh += ur->mat().transpose() * dar;

  const Vector daz = dz.cwiseProduct(z.cwiseProduct(Vector::Ones(z.size()) - z));
  wz->gmat().noalias() += daz * x.transpose();
  bz->gvec() += daz;
  uz->gmat().noalias() += daz * h.transpose();
  dh += uz->mat().transpose() * daz;

  Vector dx = wn->mat().transpose() * dan;
  dx += wr->mat().transpose() * dar;
  dx += wz->mat().transpose() * daz;
  return {dx, dh};
}

Matrix attention_coefficients(const RowMatrix& h, const Tensor& proj,
                              AttentionCache* cache) {
  const int d = static_cast<int>(h.rows());
  if (d < 2) throw ArgumentError("attention: need at least two agents");
  if (h.cols() != proj.rows()) throw DimensionError("attention: feature width mismatch");
  const int latent = proj.cols();
  const RowMatrix p = h * proj.mat();
  const double scale = 1.0 / std::sqrt(static_cast<double>(latent));
  Matrix logits = (p * p.transpose()) * scale;
  Matrix coeff = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; ++j) {
      if (j != i) mx = std::max(mx, logits(i, j));
    }
    double denom = 0.0;
    for (int j = 0; j < d; ++j) {
      if (j != i) denom += std::exp(logits(i, j) - mx);
    }
    for (int j = 0; j < d; ++j) {
      if (j != i) coeff(i, j) = std::exp(logits(i, j) - mx) / denom;
    }
  }
  if (cache) {
    cache->h = h;
    cache->p = p;
    cache->coeff = coeff;
  }
  return coeff;
}

RowMatrix attention_coefficients_backward(const AttentionCache& cache,
                                          const Matrix& dcoeff, Tensor& proj) {
  const int d = static_cast<int>(cache.h.rows());
  const int latent = proj.cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(latent));
  // softmax backward per row, self excluded
  Matrix dlogits = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    double dot = 0.0;
    for (int j = 0; j < d; ++j) {
      if (j != i) dot += cache.coeff(i, j) * dcoeff(i, j);
    }
    for (int j = 0; j < d; ++j) {
      if (j != i) dlogits(i, j) = cache.coeff(i, j) * (dcoeff(i, j) - dot);
    }
  }
  const RowMatrix dp = (dlogits + dlogits.transpose()) * cache.p * scale;
  proj.gmat().noalias() += cache.h.transpose() * dp;
  return dp * proj.mat().transpose();
}

RowMatrix multi_head_aggregate(const RowMatrix& h,
                               const std::vector<Matrix>& coeff,
                               const std::vector<Tensor*>& head_weights,
                               Act act, MultiHeadCache* cache) {
  if (coeff.empty() || coeff.size() != head_weights.size()) {
    throw ArgumentError("multi_head_aggregate: head count mismatch");
  }
  const int heads = static_cast<int>(coeff.size());
  const int d = static_cast<int>(h.rows());
  const int out_dim = head_weights[0]->rows();
  RowMatrix pre = RowMatrix::Zero(d, out_dim);
  std::vector<RowMatrix> vals;
  vals.reserve(heads);
  for (int m = 0; m < heads; ++m) {
    if (head_weights[m]->cols() != h.cols()) {
      throw DimensionError("multi_head_aggregate: head weight width mismatch");
    }
    RowMatrix v = h * head_weights[m]->mat().transpose();
    pre.noalias() += coeff[m] * v;
    vals.push_back(std::move(v));
  }
  pre /= static_cast<double>(heads);
  RowMatrix out(d, out_dim);
  for (int i = 0; i < d; ++i) {
    out.row(i) = apply_activation(pre.row(i).transpose(), act).transpose();
  }
  if (cache) {
    cache->h = h;
    cache->coeff = coeff;
    cache->vals = vals;
    cache->pre = pre;
  }
  return out;
}

RowMatrix multi_head_aggregate_backward(const MultiHeadCache& cache,
                                        const RowMatrix& dout,
                                        const std::vector<Tensor*>& head_weights,
                                        Act act,
                                        std::vector<Matrix>* dcoeff) {
  const int heads = static_cast<int>(cache.coeff.size());
  const int d = static_cast<int>(cache.h.rows());
  RowMatrix dpre(d, dout.cols());
  for (int i = 0; i < d; ++i) {
    dpre.row(i) = dout.row(i).cwiseProduct(
        activation_deriv(cache.pre.row(i).transpose(), act).transpose());
  }
  dpre /= static_cast<double>(heads);
  RowMatrix dh = RowMatrix::Zero(d, cache.h.cols());
  if (dcoeff) dcoeff->assign(heads, Matrix());
  for (int m = 0; m < heads; ++m) {
    if (dcoeff) {
      Matrix dc = dpre * cache.vals[m].transpose();
      dc.diagonal().setZero();  // self coefficient is pinned to zero
      (*dcoeff)[m] = std::move(dc);
    }
    const RowMatrix dv = cache.coeff[m].transpose() * dpre;
    head_weights[m]->gmat().noalias() += dv.transpose() * cache.h;
    dh.noalias() += dv * head_weights[m]->mat();
  }
  return dh;
}

double pairwise_decoder_score(const Vector& hl, const Vector& hr,
                              const Tensor& wl, const Tensor& wr,
                              const Tensor& u, PairScoreCache* cache) {
  if (hl.size() != wl.cols() || hr.size() != wr.cols()) {
    throw DimensionError("pairwise score: input width mismatch");
  }
  if (wl.rows() != wr.rows() || u.size() != wl.rows()) {
    throw DimensionError("pairwise score: hidden width mismatch");
  }
  const Vector a = wl.mat() * hl + wr.mat() * hr;
  const Vector t = a.array().tanh().matrix();
  const double s = sigmoid(u.vec().dot(t));
  if (cache) {
    cache->hl = hl;
    cache->hr = hr;
    cache->t = t;
    cache->s = Vector::Constant(1, s);
  }
  return s;
}

std::pair<Vector, Vector> pairwise_decoder_score_backward(
    const PairScoreCache& cache, double dscore, Tensor& wl, Tensor& wr,
    Tensor& u) {
  const double s = cache.s[0];
  const double dpre = dscore * s * (1.0 - s);
  u.gvec() += dpre * cache.t;
  const Vector dt = dpre * u.vec();
  const Vector da = dt.cwiseProduct((1.0 - cache.t.array().square()).matrix());
  wl.gmat().noalias() += da * cache.hl.transpose();
  wr.gmat().noalias() += da * cache.hr.transpose();
  return {wl.mat().transpose() * da, wr.mat().transpose() * da};
}

void RmsProp::step(ParamStore& ps) {
  if (!ps.grads_finite()) {
    throw NumericError("rmsprop: non-finite gradient, update rejected");
  }
  ps.for_each([&](const std::string& name, Tensor& t) {
    Vector& v = second_moment_.try_emplace(name, Vector::Zero(t.size())).first->second;
    v = alpha_ * v + (1.0 - alpha_) * t.grad.cwiseProduct(t.grad);
    t.value -= lr_ * t.grad.cwiseQuotient((v.cwiseSqrt().array() + eps_).matrix());
    t.grad.setZero();
  });
  if (!ps.values_finite()) {
    throw NumericError("rmsprop: parameters became non-finite");
  }
}

void validate_categorical(const Vector& probs) {
  if (probs.size() < 1) throw ArgumentError("categorical: empty support");
  if ((probs.array() < 0.0).any()) throw ArgumentError("categorical: negative probability");
  if (std::abs(probs.sum() - 1.0) > 1e-6) {
    throw ArgumentError("categorical: probabilities must sum to 1");
  }
}

int sample_categorical(const Vector& probs, Rng& rng) {
  validate_categorical(probs);
  const double u = rng.uniform();
  double cum = 0.0;
  int last_positive = -1;
  for (int i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = i;
    cum += probs[i];
    if (u < cum) return i;
  }
  return last_positive >= 0 ? last_positive : static_cast<int>(probs.size()) - 1;
}

double categorical_log_prob(const Vector& probs, int action) {
  validate_categorical(probs);
  if (action < 0 || action >= probs.size()) {
    throw ArgumentError("categorical: action index out of range");
  }
  if (probs[action] <= 0.0) {
    throw NumericError("categorical: log probability of zero-probability action");
  }
  return std::log(probs[action]);
}

int argmax_action(const Vector& probs) {
  int best = 0;
  for (int i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

Vector softmax(const Vector& logits) {
  const double mx = logits.maxCoeff();
  Vector e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

}  // namespace acgm
