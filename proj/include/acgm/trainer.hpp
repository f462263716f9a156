#pragma once

#include "acgm/common.hpp"
#include "acgm/config.hpp"
#include "acgm/coordpolicy.hpp"
#include "acgm/envs.hpp"
#include "acgm/episode.hpp"
#include "acgm/graphgen.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace acgm {

struct HyperParams {
  double gamma = 0.99;
  double lr = 5e-4;
  double rms_alpha = 0.99;
  double eps_start = 0.2;
  double eps_end = 0.05;
  long eps_anneal_steps = 50000;
  int batch_episodes = 32;
  int target_sync = 200;
  int lagrangian_every = 200;
  int warmup_episodes = 100;
  int buffer_capacity = 5000;
  int depth_k = 5;

  static HyperParams from_config(const RunConfig& cfg);
};

// Linear anneal from eps_start at step 0 to eps_end at eps_anneal_steps,
// constant afterwards. Steps are environment timesteps.
double epsilon_at(long step, const HyperParams& hp);

// Evaluation-time graph substitution: an optional fixed adjacency matrix
// (applied first) and optional uniform random edge deletion from whatever
// DAG is in effect (count < 0 drops all).
struct GraphOverride {
  std::optional<Matrix> fixed;
  std::optional<long> drop_count;

  static GraphOverride fixed_graph(Matrix dag);
  static GraphOverride drop_edges(long count);
};

// Returns the output with the effective dag/order swapped in.
GeneratorOutput apply_override(const GeneratorOutput& out, const GraphOverride& ov,
                               Rng& drop_rng);

// One full episode: per timestep, emit a graph from the current observations
// and previous joint action, act in its topological order, and step the env.
EpisodeRecord run_episode(Env& env, const GraphSource& source,
                          const ActionSelector& policy, double eps, ActMode mode,
                          double gamma, Rng& gen_rng, Rng& act_rng,
                          const GraphOverride* ov = nullptr,
                          Rng* drop_rng = nullptr);

struct EvalSummary {
  long episodes = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double mean_reward_sum = 0.0;
  double mean_edges = 0.0;
  double mean_nilpotent = 0.0;
  double violation_rate = 0.0;
};

// Greedy rollouts; graphs are still sampled from the source (consuming the
// generator stream identically with or without an override) before any
// override is applied.
EvalSummary evaluate_policy(Env& env, const GraphSource& source,
                            const ActionSelector& policy, long episodes,
                            std::uint64_t seed, double gamma, int depth_k,
                            const GraphOverride* ov = nullptr);

struct TrainResult {
  long episodes_run = 0;
  bool aborted_nan = false;
  std::string diagnostic;
  LagrangianState lag;
  std::vector<double> train_returns;  // discounted, one per episode
  std::vector<double> eval_returns;   // mean greedy return, one per episode
  std::string metrics_path;
  std::string final_checkpoint_path;
};

class TrainSession {
 public:
  explicit TrainSession(const RunConfig& cfg);
  ~TrainSession();

  // Runs the full loop; when write_files is false nothing is persisted.
  TrainResult run(bool write_files = true);

  const RunConfig& config() const { return cfg_; }
  GraphGenerator& generator() { return *generator_; }
  CoordPolicy& policy() { return *policy_; }
  const LagrangianState& lagrangian() const { return lag_; }

  void save_checkpoint_file(const std::string& path) const;

 private:
  RunConfig cfg_;
  HyperParams hp_;
  std::unique_ptr<Env> env_, eval_env_;
  std::unique_ptr<GraphGenerator> generator_;
  std::unique_ptr<GraphSource> override_source_;
  std::unique_ptr<CoordPolicy> policy_;
  std::unique_ptr<ReplayBuffer> buffer_;
  RmsProp gen_opt_;
  LagrangianState lag_;
  Rng master_;
  Rng gen_rng_, act_rng_, replay_rng_, eval_gen_rng_, eval_act_rng_;
  long env_steps_ = 0;
  long updates_ = 0;
};

std::unique_ptr<Env> make_env(const RunConfig& cfg, std::uint64_t seed);

// Parses "none"/"empty"/"g528"/path into a fixed graph; nullopt for "none".
std::optional<Matrix> parse_graph_override(const std::string& token, int agents);

// Reads a whitespace-separated 0/1 matrix file.
Matrix read_matrix_file(const std::string& path);

struct LoadedModel {
  RunConfig cfg;
  std::unique_ptr<GraphGenerator> generator;
  std::unique_ptr<CoordPolicy> policy;
};

// Rebuilds the networks from the checkpoint's embedded config and restores
// every tensor.
LoadedModel load_model(const std::string& ckpt_path);

const std::string& build_id();

}  // namespace acgm
