#pragma once

#include "acgm/common.hpp"
#include "acgm/episode.hpp"
#include "acgm/tinynet.hpp"

#include <memory>
#include <vector>

namespace acgm {

struct PolicyConfig {
  int num_agents = 2;
  int obs_dim = 1;
  int num_actions = 2;
  int hidden = 64;         // actor recurrent width
  int critic_hidden = 64;  // critic MLP width
};

// r if done, else r + gamma * max_next_q.
double td_target(double r, bool done, double gamma, double max_next_q);

// Fixed-width actor input: own observation, one-hot previous action, and one
// (one-hot action, presence bit) slot per agent. Non-parents keep all-zero
// slots; slot j is filled from parent_actions[j] when it is >= 0.
Vector augmented_observation(const Vector& obs, int last_action,
                             const std::vector<int>& parent_actions,
                             int num_agents, int num_actions);

inline int augmented_width(const PolicyConfig& cfg) {
  return cfg.obs_dim + cfg.num_actions + cfg.num_agents * (cfg.num_actions + 1);
}

enum class ActMode { Sample, Greedy };

struct ActResult {
  std::vector<int> actions;
  std::vector<Vector> hidden;    // updated recurrent state per agent
  std::vector<double> logprobs;  // of the chosen actions under the eps-mixture
};

// Anything that can pick a joint action given a coordination graph. Lets the
// rollout machinery run against scripted policies in tests.
class ActionSelector {
 public:
  virtual ~ActionSelector() = default;
  virtual std::vector<Vector> initial_hidden() const = 0;
  virtual ActResult act_in_order(const Matrix& dag, const std::vector<int>& order,
                                 const std::vector<Vector>& obs,
                                 const std::vector<int>& last_actions,
                                 const std::vector<Vector>& hidden, double eps,
                                 ActMode mode, Rng& rng) const = 0;
};

// Per-agent recurrent actors plus one centralized critic per agent, with
// frozen target copies of both. Agents act in the topological order of the
// coordination graph, each conditioning on its parents' already-chosen
// actions.
class CoordPolicy : public ActionSelector {
 public:
  CoordPolicy(const PolicyConfig& cfg, double lr, double rms_alpha, Rng& init_rng);

  const PolicyConfig& config() const { return cfg_; }

  std::vector<Vector> initial_hidden() const override;

  // Evaluates the agents in `order` (validated against `dag`), feeding each
  // one its parents' freshly chosen actions. With probability eps an agent
  // acts uniformly; logprobs are reported under that mixture.
  ActResult act_in_order(const Matrix& dag, const std::vector<int>& order,
                         const std::vector<Vector>& obs,
                         const std::vector<int>& last_actions,
                         const std::vector<Vector>& hidden, double eps,
                         ActMode mode, Rng& rng) const override;

  // Q^i(s, u) for the concatenated-observation state and a joint action.
  double critic_value(int agent, const Vector& state,
                      const std::vector<int>& joint_action) const;

  // Policy-gradient step over whole episodes (recurrent states are rebuilt
  // by replaying from the episode start). Returns the surrogate loss.
  // apply_step=false accumulates gradients without touching the parameters
  // (used by the gradient checks).
  double actor_update(const std::vector<const EpisodeRecord*>& batch,
                      bool apply_step = true);

  // One TD step on every critic; the max over next joint actions is taken
  // at the greedy joint action of the frozen target actors under the stored
  // next graph. Returns the pre-step mean squared TD error.
  double critic_update(const std::vector<const EpisodeRecord*>& batch,
                       double gamma, bool apply_step = true);

  void sync_targets();

  // Probability vector of agent `i` for one augmented input (test hook).
  Vector action_probs(int agent, const Vector& augmented, const Vector& hidden,
                      Vector* hidden_out = nullptr) const;

  ParamStore& actor_params() { return *actor_params_; }
  ParamStore& critic_params() { return *critic_params_; }
  const ParamStore& actor_params() const { return *actor_params_; }
  const ParamStore& critic_params() const { return *critic_params_; }
  ParamStore& target_actor_params() { return *target_actor_params_; }
  ParamStore& target_critic_params() { return *target_critic_params_; }

 private:
  struct ActorNet {
    DenseLayer in;
    GruCell gru;
    DenseLayer out;
  };
  struct CriticNet {
    DenseLayer l1, l2, l3;
  };

  ActResult act_impl(const std::vector<ActorNet>& nets, const Matrix& dag,
                     const std::vector<int>& order,
                     const std::vector<Vector>& obs,
                     const std::vector<int>& last_actions,
                     const std::vector<Vector>& hidden, double eps,
                     ActMode mode, Rng* rng) const;

  double critic_forward(const CriticNet& net, const Vector& input,
                        DenseCache* c1, DenseCache* c2, DenseCache* c3) const;

  Vector critic_input(const Vector& state, const std::vector<int>& joint) const;

  PolicyConfig cfg_;
  std::unique_ptr<ParamStore> actor_params_, critic_params_;
  std::unique_ptr<ParamStore> target_actor_params_, target_critic_params_;
  std::vector<ActorNet> actors_, target_actors_;
  std::vector<CriticNet> critics_, target_critics_;
  RmsProp actor_opt_, critic_opt_;
};

}  // namespace acgm
