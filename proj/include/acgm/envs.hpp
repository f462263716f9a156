#pragma once

#include "acgm/common.hpp"

#include <memory>
#include <vector>

namespace acgm {

struct StepResult {
  std::vector<Vector> obs;
  double reward = 0.0;
  bool done = false;
};

// Seedable, single-threaded environment. Actions are indices into the
// discrete action set; observation widths are constant across an episode
// and across resets.
class Env {
 public:
  virtual ~Env() = default;

  virtual int num_agents() const = 0;
  virtual int num_actions() const = 0;
  virtual int obs_dim() const = 0;
  virtual int episode_len() const = 0;

  virtual std::vector<Vector> reset() = 0;
  virtual StepResult step(const std::vector<int>& actions) = 0;
};

// Shared reward G(f) = f e^{-(f-5)^2/1.5625} - f e^{-(f+5)^2/1.5625},
// a signed pair of Gaussian bumps in the mobilized resource f.
double cgs_reward(double f);

// Resource-squeeze task: agent i holds a fixed resource s_i ~ U[0, 0.2]
// drawn at reset; joint action a in {-10..10}^d mobilizes f = sum s_i a_i.
// Action index u maps to the signed action u - 10.
class CgsEnv : public Env {
 public:
  CgsEnv(int agents, int episode_len, std::uint64_t seed,
         bool terminal_reward_only = false);

  int num_agents() const override { return agents_; }
  int num_actions() const override { return 21; }
  int obs_dim() const override { return 2; }  // (s_i, t/T)
  int episode_len() const override { return episode_len_; }

  std::vector<Vector> reset() override;
  StepResult step(const std::vector<int>& actions) override;

  // Test hook: pin the per-agent resources for subsequent episodes.
  void override_resources(const std::vector<double>& s);

  const std::vector<double>& resources() const { return s_; }

 private:
  std::vector<Vector> observe() const;

  int agents_;
  int episode_len_;
  bool terminal_reward_only_;
  Rng rng_;
  std::vector<double> s_;
  std::vector<double> forced_s_;
  int t_ = 0;
  bool done_ = true;
};

// Cooperative navigation on the arena [-1,1]^2: d agents cover d landmarks.
// Actions: 0 up, 1 down, 2 left, 3 right, 4 stop; each move is 0.1 units.
// Reward: -sum over landmarks of the distance to the nearest agent, minus 1
// per colliding agent pair (distance < 0.1).
class NavEnv : public Env {
 public:
  NavEnv(int agents, int episode_len, std::uint64_t seed);

  int num_agents() const override { return agents_; }
  int num_actions() const override { return 5; }
  int obs_dim() const override { return 4 * agents_; }
  int episode_len() const override { return episode_len_; }

  std::vector<Vector> reset() override;
  StepResult step(const std::vector<int>& actions) override;

  // Test hooks.
  void place_agents(const std::vector<Eigen::Vector2d>& pos);
  void place_landmarks(const std::vector<Eigen::Vector2d>& pos);
  double current_reward() const;

 private:
  std::vector<Vector> observe() const;

  int agents_;
  int episode_len_;
  Rng rng_;
  std::vector<Eigen::Vector2d> pos_, landmarks_;
  int t_ = 0;
  bool done_ = true;
};

// Two-agent, one-step signalling game used as an analytic oracle: a hidden
// bit z is drawn at reset; agent 0 observes z (as -1/+1), agent 1 observes
// nothing. Reward 1 iff u0 = z and u1 = u0. The best pair of independent
// policies earns 0.5 in expectation; observing the partner's move earns 1.
class CoordGameEnv : public Env {
 public:
  explicit CoordGameEnv(std::uint64_t seed);

  int num_agents() const override { return 2; }
  int num_actions() const override { return 2; }
  int obs_dim() const override { return 1; }
  int episode_len() const override { return 1; }

  std::vector<Vector> reset() override;
  StepResult step(const std::vector<int>& actions) override;

  int hidden_target() const { return z_; }

 private:
  Rng rng_;
  int z_ = 0;
  bool done_ = true;
};

}  // namespace acgm
