#include "acgm/graphgen.hpp"

#include "acgm/dagmath.hpp"

#include <algorithm>
#include <cmath>

namespace acgm {

namespace {

constexpr double kProbClamp = 1e-6;

double clamp_prob(double p) {
  return std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
}

}  // namespace

LagrangianState lagrangian_step(const LagrangianState& s, double g, double c) {
  LagrangianState next = s;
  next.lambda1 = s.lambda1 + s.xi * g;
  next.lambda2 = s.lambda2 + s.xi * c;
  if (g + c > 0.25 * s.violation_prev) {
    next.xi = std::min(10.0 * s.xi, 1e8);
  }
  next.violation_prev = g + c;
  return next;
}

std::pair<double, double> constraint_values(const GeneratorOutput& out, int k) {
  return {dagmath::acyclicity_value(out.weights),
          dagmath::depth_value(out.weights, k)};
}

Matrix sample_edges(const Matrix& weights, Rng& rng) {
  const int d = static_cast<int>(weights.rows());
  Matrix sampled = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      sampled(i, j) = rng.uniform() < weights(i, j) ? 1.0 : 0.0;
    }
  }
  return sampled;
}

double sample_logprob(const Matrix& weights, const Matrix& sampled) {
  if (weights.rows() != sampled.rows() || weights.cols() != sampled.cols()) {
    throw DimensionError("sample_logprob: shape mismatch");
  }
  double lp = 0.0;
  const int d = static_cast<int>(weights.rows());
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      const double w = clamp_prob(weights(i, j));
      lp += sampled(i, j) != 0.0 ? std::log(w) : std::log1p(-w);
    }
  }
  return lp;
}

Matrix repair_to_dag(const Matrix& sampled, const Matrix& weights) {
  if (sampled.rows() != weights.rows() || sampled.cols() != weights.cols()) {
    throw DimensionError("repair_to_dag: shape mismatch");
  }
  Matrix dag = sampled;
  for (;;) {
    const std::vector<int> cycle = dagmath::find_cycle(dag);
    if (cycle.empty()) break;
    int best_src = -1, best_dst = -1;
    double best_w = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < cycle.size(); ++t) {
      const int src = cycle[t];
      const int dst = cycle[(t + 1) % cycle.size()];
      const double w = weights(src, dst);
      if (w < best_w ||
          (w == best_w && std::pair(src, dst) < std::pair(best_src, best_dst))) {
        best_w = w;
        best_src = src;
        best_dst = dst;
      }
    }
    dag(best_src, best_dst) = 0.0;
  }
  return dag;
}

GeneratorOutput realize_output(const Matrix& weights, Rng& rng) {
  GeneratorOutput out;
  out.weights = weights;
  out.sampled = sample_edges(weights, rng);
  out.logprob = sample_logprob(weights, out.sampled);
  out.dag = repair_to_dag(out.sampled, weights);
  out.repaired = (out.dag - out.sampled).cwiseAbs().sum() != 0.0;
  out.order = dagmath::topological_order(out.dag);
  return out;
}

FixedGraphSource::FixedGraphSource(Matrix dag) : dag_(std::move(dag)) {
  if (!dagmath::is_acyclic(dag_)) {
    throw CyclicGraphError("FixedGraphSource: graph must be acyclic");
  }
  order_ = dagmath::topological_order(dag_);
}

GeneratorOutput FixedGraphSource::generate(const std::vector<Vector>&,
                                           const std::vector<int>&,
                                           Rng&) const {
  GeneratorOutput out;
  out.weights = dag_;
  out.sampled = dag_;
  out.dag = dag_;
  out.order = order_;
  out.logprob = 0.0;
  out.repaired = false;
  return out;
}

// ---------------------------------------------------------------------------
// GraphGenerator

struct GraphGenerator::EncoderStack {
  struct Layer {
    std::vector<Tensor*> proj;  // per head, [in, latent]
    std::vector<Tensor*> w;     // per head, [out, in]
  };
  std::vector<Layer> layers;

  static EncoderStack create(ParamStore& ps, const std::string& prefix,
                             const GeneratorConfig& cfg, Rng& rng) {
    EncoderStack st;
    const int latent = std::max(1, cfg.hidden / cfg.heads);
    for (int l = 0; l < cfg.attn_layers; ++l) {
      Layer layer;
      for (int m = 0; m < cfg.heads; ++m) {
        const std::string base =
            prefix + ".l" + std::to_string(l) + ".h" + std::to_string(m);
        layer.proj.push_back(
            &ps.add(base + ".proj", {cfg.hidden, latent}, cfg.hidden, rng));
        layer.w.push_back(
            &ps.add(base + ".w", {cfg.hidden, cfg.hidden}, cfg.hidden, rng));
      }
      st.layers.push_back(std::move(layer));
    }
    return st;
  }
};

namespace {

struct LayerCache {
  std::vector<AttentionCache> attn;  // per head
  MultiHeadCache agg;
};

struct StackCache {
  std::vector<LayerCache> layers;
  RowMatrix out;
};

}  // namespace

struct GraphGenerator::Forward {
  std::vector<DenseCache> f1, f2;
  RowMatrix features;  // d x hidden
  StackCache left, right;
  std::vector<PairScoreCache> pair;  // row-major over (i, j), i != j
  Matrix weights;
};

GraphGenerator::GraphGenerator(const GeneratorConfig& cfg, Rng& init_rng)
    : cfg_(cfg), params_(std::make_unique<ParamStore>()) {
  if (cfg_.num_agents < 1) throw ArgumentError("generator: num_agents must be >= 1");
  if (cfg_.heads < 1) throw ArgumentError("generator: heads must be >= 1");
  if (cfg_.attn_layers < 1) throw ArgumentError("generator: attn_layers must be >= 1");
  const int in_dim = cfg_.obs_dim + cfg_.num_actions;
  feat1_ = DenseLayer::create(*params_, "gen.feat1", in_dim, cfg_.feature_hidden,
                              Act::Relu, init_rng);
  feat2_ = DenseLayer::create(*params_, "gen.feat2", cfg_.feature_hidden,
                              cfg_.hidden, Act::Linear, init_rng);
  enc_left_ = std::make_unique<EncoderStack>(
      EncoderStack::create(*params_, "gen.encl", cfg_, init_rng));
  enc_right_ = std::make_unique<EncoderStack>(
      EncoderStack::create(*params_, "gen.encr", cfg_, init_rng));
  dec_wl_ = &params_->add("gen.dec.wl", {cfg_.hidden, cfg_.hidden}, cfg_.hidden, init_rng);
  dec_wr_ = &params_->add("gen.dec.wr", {cfg_.hidden, cfg_.hidden}, cfg_.hidden, init_rng);
  dec_u_ = &params_->add("gen.dec.u", {cfg_.hidden, 1}, cfg_.hidden, init_rng);
}

GraphGenerator::~GraphGenerator() = default;

Vector GraphGenerator::agent_input(const Vector& obs, int last_action) const {
  if (obs.size() != cfg_.obs_dim) {
    throw DimensionError("generator: observation width mismatch");
  }
  Vector x = Vector::Zero(cfg_.obs_dim + cfg_.num_actions);
  x.head(cfg_.obs_dim) = obs;
  if (last_action >= 0) {
    if (last_action >= cfg_.num_actions) {
      throw ArgumentError("generator: last action out of range");
    }
    x[cfg_.obs_dim + last_action] = 1.0;
  }
  return x;
}

namespace {

RowMatrix run_stack(const GraphGenerator::EncoderStack& stack,
                    const RowMatrix& features, StackCache* cache) {
  RowMatrix x = features;
  if (cache) cache->layers.resize(stack.layers.size());
  for (std::size_t l = 0; l < stack.layers.size(); ++l) {
    const auto& layer = stack.layers[l];
    LayerCache* lc = cache ? &cache->layers[l] : nullptr;
    if (lc) lc->attn.resize(layer.proj.size());
    std::vector<Matrix> coeff(layer.proj.size());
    for (std::size_t m = 0; m < layer.proj.size(); ++m) {
      coeff[m] = attention_coefficients(x, *layer.proj[m],
                                        lc ? &lc->attn[m] : nullptr);
    }
    x = multi_head_aggregate(x, coeff, layer.w, Act::Elu,
                             lc ? &lc->agg : nullptr);
  }
  if (cache) cache->out = x;
  return x;
}

RowMatrix backward_stack(const GraphGenerator::EncoderStack& stack,
                         StackCache& cache, const RowMatrix& dout) {
  RowMatrix dx = dout;
  for (int l = static_cast<int>(stack.layers.size()) - 1; l >= 0; --l) {
    const auto& layer = stack.layers[l];
    LayerCache& lc = cache.layers[l];
    std::vector<Matrix> dcoeff;
    RowMatrix dinput = multi_head_aggregate_backward(lc.agg, dx, layer.w,
                                                     Act::Elu, &dcoeff);
    for (std::size_t m = 0; m < layer.proj.size(); ++m) {
      dinput += attention_coefficients_backward(lc.attn[m], dcoeff[m],
                                                *layer.proj[m]);
    }
    dx = std::move(dinput);
  }
  return dx;
}

}  // namespace

Matrix GraphGenerator::forward(const std::vector<Vector>& obs,
                               const std::vector<int>& last_actions,
                               Forward* fw) const {
  const int d = cfg_.num_agents;
  if (static_cast<int>(obs.size()) != d ||
      static_cast<int>(last_actions.size()) != d) {
    throw DimensionError("generator: expected one observation and last action per agent");
  }
  RowMatrix features(d, cfg_.hidden);
  if (fw) {
    fw->f1.resize(d);
    fw->f2.resize(d);
  }
  for (int i = 0; i < d; ++i) {
    const Vector x = agent_input(obs[i], last_actions[i]);
    const Vector h1 = feat1_.forward(x, fw ? &fw->f1[i] : nullptr);
    const Vector h2 = feat2_.forward(h1, fw ? &fw->f2[i] : nullptr);
    features.row(i) = h2.transpose();
  }
  if (fw) fw->features = features;

  const RowMatrix hl = run_stack(*enc_left_, features, fw ? &fw->left : nullptr);
  const RowMatrix hr = run_stack(*enc_right_, features, fw ? &fw->right : nullptr);

  Matrix weights = Matrix::Zero(d, d);
  if (fw) fw->pair.resize(static_cast<std::size_t>(d) * d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      PairScoreCache* pc = fw ? &fw->pair[static_cast<std::size_t>(i) * d + j] : nullptr;
      weights(i, j) = pairwise_decoder_score(hl.row(i).transpose(),
                                             hr.row(j).transpose(), *dec_wl_,
                                             *dec_wr_, *dec_u_, pc);
    }
  }
  if (fw) fw->weights = weights;
  return weights;
}

void GraphGenerator::backward(Forward& fw, const Matrix& dweights) {
  const int d = cfg_.num_agents;
  RowMatrix dhl = RowMatrix::Zero(d, cfg_.hidden);
  RowMatrix dhr = RowMatrix::Zero(d, cfg_.hidden);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j || dweights(i, j) == 0.0) continue;
      auto [dl, dr] = pairwise_decoder_score_backward(
          fw.pair[static_cast<std::size_t>(i) * d + j], dweights(i, j),
          *dec_wl_, *dec_wr_, *dec_u_);
      dhl.row(i) += dl.transpose();
      dhr.row(j) += dr.transpose();
    }
  }
  RowMatrix dfeat = backward_stack(*enc_left_, fw.left, dhl);
  dfeat += backward_stack(*enc_right_, fw.right, dhr);
  for (int i = 0; i < d; ++i) {
    const Vector dh2 = dfeat.row(i).transpose();
    const Vector dh1 = feat2_.backward(fw.f2[i], dh2);
    feat1_.backward(fw.f1[i], dh1);
  }
}

Matrix GraphGenerator::weight_matrix(const std::vector<Vector>& obs,
                                     const std::vector<int>& last_actions) const {
  return forward(obs, last_actions, nullptr);
}

GeneratorOutput GraphGenerator::generate(const std::vector<Vector>& obs,
                                         const std::vector<int>& last_actions,
                                         Rng& rng) const {
  if (cfg_.num_agents == 1) {
    GeneratorOutput out;
    out.weights = Matrix::Zero(1, 1);
    out.sampled = Matrix::Zero(1, 1);
    out.dag = Matrix::Zero(1, 1);
    out.order = {0};
    out.logprob = 0.0;
    return out;
  }
  return realize_output(forward(obs, last_actions, nullptr), rng);
}

namespace {

// d logprob / d weights at the clamped probabilities; zero where clamped.
Matrix logprob_weight_grad(const Matrix& weights, const Matrix& sampled) {
  const int d = static_cast<int>(weights.rows());
  Matrix g = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      const double w = weights(i, j);
      if (w <= kProbClamp || w >= 1.0 - kProbClamp) continue;
      g(i, j) = sampled(i, j) != 0.0 ? 1.0 / w : -1.0 / (1.0 - w);
    }
  }
  return g;
}

}  // namespace

GraphGenerator::GradStats GraphGenerator::accumulate_gradient(
    const std::vector<Sample>& batch, const LagrangianState& lag) {
  if (batch.empty()) throw ArgumentError("generator gradient: empty batch");
  if (lag.depth_k < 1) throw ArgumentError("generator gradient: depth bound must be >= 1");
  double baseline = 0.0;
  for (const Sample& s : batch) {
    if (!std::isfinite(s.score)) throw ArgumentError("generator gradient: non-finite score");
    baseline += s.score;
  }
  baseline /= static_cast<double>(batch.size());

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  GradStats stats;
  Forward fw;
  for (const Sample& s : batch) {
    const Matrix w = forward(*s.obs, *s.last_actions, &fw);
    const double g = dagmath::acyclicity_value(w);
    const double c = dagmath::depth_value(w, lag.depth_k);
    stats.mean_g += g * inv_n;
    stats.mean_c += c * inv_n;

    // Descent direction for -return + multiplier and quadratic penalties.
    Matrix dw = -(s.score - baseline) * logprob_weight_grad(w, *s.sampled);
    dw += (lag.lambda1 + lag.xi * g) * dagmath::acyclicity_grad(w);
    dw += (lag.lambda2 + lag.xi * c) * dagmath::depth_grad(w, lag.depth_k);
    dw.diagonal().setZero();
    dw *= inv_n;
    backward(fw, dw);
  }
  return stats;
}

Vector GraphGenerator::logprob_param_grad(const std::vector<Vector>& obs,
                                          const std::vector<int>& last_actions,
                                          const Matrix& sampled) {
  Vector saved = params_->flat_grads();
  params_->zero_grads();
  Forward fw;
  const Matrix w = forward(obs, last_actions, &fw);
  backward(fw, logprob_weight_grad(w, sampled));
  Vector out = params_->flat_grads();
  params_->zero_grads();
  // restore whatever was accumulated before the probe
  int off = 0;
  params_->for_each([&](const std::string&, Tensor& t) {
    t.grad = saved.segment(off, t.size());
    off += t.size();
  });
  return out;
}

}  // namespace acgm
