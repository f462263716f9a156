#include "acgm/envs.hpp"

#include <cmath>

namespace acgm {

namespace {

void check_actions(const std::vector<int>& actions, int agents, int num_actions) {
  if (static_cast<int>(actions.size()) != agents) {
    throw ArgumentError("env: expected one action per agent");
  }
  for (int a : actions) {
    if (a < 0 || a >= num_actions) {
      throw ArgumentError("env: action index out of range");
    }
  }
}

}  // namespace

double cgs_reward(double f) {
  if (!std::isfinite(f)) throw ArgumentError("cgs_reward: f must be finite");
  const double mu = 5.0;
  const double sigma_sq = 1.25 * 1.25;
  return f * std::exp(-(f - mu) * (f - mu) / sigma_sq) -
         f * std::exp(-(f + mu) * (f + mu) / sigma_sq);
}

CgsEnv::CgsEnv(int agents, int episode_len, std::uint64_t seed,
               bool terminal_reward_only)
    : agents_(agents),
      episode_len_(episode_len),
      terminal_reward_only_(terminal_reward_only),
      rng_(seed) {
  if (agents < 1) throw ArgumentError("cgs: need at least one agent");
  if (episode_len < 1) throw ArgumentError("cgs: episode length must be positive");
}

void CgsEnv::override_resources(const std::vector<double>& s) {
  if (static_cast<int>(s.size()) != agents_) {
    throw ArgumentError("cgs: one resource per agent");
  }
  forced_s_ = s;
}

std::vector<Vector> CgsEnv::reset() {
  s_.resize(agents_);
  for (int i = 0; i < agents_; ++i) s_[i] = rng_.uniform(0.0, 0.2);
  if (!forced_s_.empty()) s_ = forced_s_;
  t_ = 0;
  done_ = false;
  return observe();
}

std::vector<Vector> CgsEnv::observe() const {
  std::vector<Vector> obs(agents_);
  for (int i = 0; i < agents_; ++i) {
    obs[i] = Vector(2);
    obs[i] << s_[i], static_cast<double>(t_) / episode_len_;
  }
  return obs;
}

StepResult CgsEnv::step(const std::vector<int>& actions) {
  if (done_) throw ProtocolError("cgs: step after episode end");
  check_actions(actions, agents_, num_actions());
  double f = 0.0;
  for (int i = 0; i < agents_; ++i) {
    f += s_[i] * static_cast<double>(actions[i] - 10);
  }
  ++t_;
  done_ = t_ >= episode_len_;
  StepResult r;
  r.reward = (!terminal_reward_only_ || done_) ? cgs_reward(f) : 0.0;
  r.done = done_;
  r.obs = observe();
  return r;
}

NavEnv::NavEnv(int agents, int episode_len, std::uint64_t seed)
    : agents_(agents), episode_len_(episode_len), rng_(seed) {
  if (agents < 1) throw ArgumentError("nav: need at least one agent");
  if (episode_len < 1) throw ArgumentError("nav: episode length must be positive");
}

std::vector<Vector> NavEnv::reset() {
  pos_.resize(agents_);
  landmarks_.resize(agents_);
  for (auto& p : pos_) p = {rng_.uniform(-1.0, 1.0), rng_.uniform(-1.0, 1.0)};
  for (auto& p : landmarks_) p = {rng_.uniform(-1.0, 1.0), rng_.uniform(-1.0, 1.0)};
  t_ = 0;
  done_ = false;
  return observe();
}

void NavEnv::place_agents(const std::vector<Eigen::Vector2d>& pos) {
  if (static_cast<int>(pos.size()) != agents_) throw ArgumentError("nav: wrong count");
  pos_ = pos;
  done_ = false;
}

void NavEnv::place_landmarks(const std::vector<Eigen::Vector2d>& pos) {
  if (static_cast<int>(pos.size()) != agents_) throw ArgumentError("nav: wrong count");
  landmarks_ = pos;
  done_ = false;
}

std::vector<Vector> NavEnv::observe() const {
  std::vector<Vector> obs(agents_);
  for (int i = 0; i < agents_; ++i) {
    Vector o(obs_dim());
    int k = 0;
    o[k++] = pos_[i].x();
    o[k++] = pos_[i].y();
    for (const auto& lm : landmarks_) {
      o[k++] = lm.x() - pos_[i].x();
      o[k++] = lm.y() - pos_[i].y();
    }
    for (int j = 0; j < agents_; ++j) {
      if (j == i) continue;
      o[k++] = pos_[j].x() - pos_[i].x();
      o[k++] = pos_[j].y() - pos_[i].y();
    }
    obs[i] = o;
  }
  return obs;
}

double NavEnv::current_reward() const {
  double reward = 0.0;
  for (const auto& lm : landmarks_) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pos_) best = std::min(best, (lm - p).norm());
    reward -= best;
  }
  for (int i = 0; i < agents_; ++i) {
    for (int j = i + 1; j < agents_; ++j) {
      if ((pos_[i] - pos_[j]).norm() < 0.1) reward -= 1.0;
    }
  }
  return reward;
}

StepResult NavEnv::step(const std::vector<int>& actions) {
  if (done_) throw ProtocolError("nav: step after episode end");
  check_actions(actions, agents_, num_actions());
  static const double dx[5] = {0.0, 0.0, -0.1, 0.1, 0.0};
  static const double dy[5] = {0.1, -0.1, 0.0, 0.0, 0.0};
  for (int i = 0; i < agents_; ++i) {
    pos_[i].x() = std::clamp(pos_[i].x() + dx[actions[i]], -1.0, 1.0);
    pos_[i].y() = std::clamp(pos_[i].y() + dy[actions[i]], -1.0, 1.0);
  }
  ++t_;
  done_ = t_ >= episode_len_;
  StepResult r;
  r.reward = current_reward();
  r.done = done_;
  r.obs = observe();
  return r;
}

CoordGameEnv::CoordGameEnv(std::uint64_t seed) : rng_(seed) {}

std::vector<Vector> CoordGameEnv::reset() {
  z_ = rng_.uniform() < 0.5 ? 0 : 1;
  done_ = false;
  std::vector<Vector> obs(2);
  obs[0] = Vector::Constant(1, z_ == 0 ? -1.0 : 1.0);
  obs[1] = Vector::Zero(1);
  return obs;
}

StepResult CoordGameEnv::step(const std::vector<int>& actions) {
  if (done_) throw ProtocolError("coordgame: step after episode end");
  check_actions(actions, 2, 2);
  done_ = true;
  StepResult r;
  r.reward = (actions[0] == z_ && actions[1] == actions[0]) ? 1.0 : 0.0;
  r.done = true;
  r.obs = {Vector::Constant(1, z_ == 0 ? -1.0 : 1.0), Vector::Zero(1)};
  return r;
}

}  // namespace acgm
