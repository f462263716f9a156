#pragma once

#include "acgm/common.hpp"
#include "acgm/tinynet.hpp"

#include <limits>
#include <memory>
#include <vector>

namespace acgm {

struct GeneratorConfig {
  int num_agents = 2;
  int obs_dim = 1;
  int num_actions = 2;
  int feature_hidden = 64;  // width of the per-agent feature MLP
  int hidden = 64;          // encoder width
  int attn_layers = 4;      // stacked attention layers per encoder
  int heads = 8;            // attention heads per layer
};

// One emitted graph: edge probabilities, the raw Bernoulli sample, the
// acyclic repair of that sample, its execution order, and the sample's
// log-probability under the probabilities (pre-repair).
struct GeneratorOutput {
  Matrix weights;
  Matrix sampled;
  Matrix dag;
  std::vector<int> order;
  double logprob = 0.0;
  bool repaired = false;  // true when the raw sample contained a cycle
};

// Penalty coefficient and multipliers for the acyclicity and depth
// constraints, plus the depth bound k fixed for the run.
struct LagrangianState {
  double xi = 1.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  int depth_k = 5;
  double violation_prev = std::numeric_limits<double>::infinity();
};

// lambda_i <- lambda_i + xi * violation; xi grows tenfold (capped at 1e8)
// whenever the total violation fails to shrink by 4x since the last call.
LagrangianState lagrangian_step(const LagrangianState& s, double g, double c);

// (g, c) evaluated on the continuous weight matrix.
std::pair<double, double> constraint_values(const GeneratorOutput& out, int k);

// Independent Bernoulli draw per off-diagonal entry, row-major order.
Matrix sample_edges(const Matrix& weights, Rng& rng);

// Log-probability of a sampled binary matrix under the weight matrix,
// probabilities clamped to [1e-6, 1 - 1e-6].
double sample_logprob(const Matrix& weights, const Matrix& sampled);

// Deletes the minimum-weight edge on some cycle (ties: smallest
// (source, target) pair) until the graph is acyclic. Edges not on any
// cycle are never touched.
Matrix repair_to_dag(const Matrix& sampled, const Matrix& weights);

// sample + logprob + repair + topological order for a given weight matrix.
GeneratorOutput realize_output(const Matrix& weights, Rng& rng);

// Anything that can emit a coordination graph each timestep. The trainer and
// evaluation harness only depend on this interface, so tests and fixed-graph
// baselines can stand in for the learned generator.
class GraphSource {
 public:
  virtual ~GraphSource() = default;
  virtual GeneratorOutput generate(const std::vector<Vector>& obs,
                                   const std::vector<int>& last_actions,
                                   Rng& rng) const = 0;
};

// Always emits the same fixed DAG (weights equal to the adjacency).
class FixedGraphSource : public GraphSource {
 public:
  explicit FixedGraphSource(Matrix dag);
  GeneratorOutput generate(const std::vector<Vector>& obs,
                           const std::vector<int>& last_actions,
                           Rng& rng) const override;

 private:
  Matrix dag_;
  std::vector<int> order_;
};

// Learned generator: per-agent feature MLP, two independently parameterized
// attention encoder stacks, and a pairwise decoder producing the edge
// probabilities.
class GraphGenerator : public GraphSource {
 public:
  GraphGenerator(const GeneratorConfig& cfg, Rng& init_rng);
  ~GraphGenerator() override;

  const GeneratorConfig& config() const { return cfg_; }
  ParamStore& params() { return *params_; }
  const ParamStore& params() const { return *params_; }

  // Forward pass to the edge-probability matrix.
  Matrix weight_matrix(const std::vector<Vector>& obs,
                       const std::vector<int>& last_actions) const;

  GeneratorOutput generate(const std::vector<Vector>& obs,
                           const std::vector<int>& last_actions,
                           Rng& rng) const override;

  struct Sample {
    const std::vector<Vector>* obs = nullptr;
    const std::vector<int>* last_actions = nullptr;
    const Matrix* sampled = nullptr;  // pre-repair binary sample
    double score = 0.0;               // episode discounted return
  };

  struct GradStats {
    double mean_g = 0.0;
    double mean_c = 0.0;
  };

  // Accumulates the gradient of the penalized objective into the parameter
  // store: the score-function term uses the batch-mean score as baseline,
  // and the constraint terms flow exactly through the weight matrix.
  GradStats accumulate_gradient(const std::vector<Sample>& batch,
                                const LagrangianState& lag);

  // Flat gradient of log rho(sampled | obs) w.r.t. all parameters; used by
  // the estimator tests.
  Vector logprob_param_grad(const std::vector<Vector>& obs,
                            const std::vector<int>& last_actions,
                            const Matrix& sampled);

  struct EncoderStack;

 private:
  struct Forward;

  Matrix forward(const std::vector<Vector>& obs,
                 const std::vector<int>& last_actions, Forward* fw) const;
  void backward(Forward& fw, const Matrix& dweights);

  Vector agent_input(const Vector& obs, int last_action) const;

  GeneratorConfig cfg_;
  std::unique_ptr<ParamStore> params_;
  DenseLayer feat1_, feat2_;
  std::unique_ptr<EncoderStack> enc_left_, enc_right_;
  Tensor *dec_wl_, *dec_wr_, *dec_u_;
};

}  // namespace acgm
