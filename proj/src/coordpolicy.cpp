#include "acgm/coordpolicy.hpp"

#include "acgm/dagmath.hpp"

#include <algorithm>
#include <cmath>

namespace acgm {

double td_target(double r, bool done, double gamma, double max_next_q) {
  if (gamma <= 0.0 || gamma >= 1.0) throw ArgumentError("td_target: gamma must be in (0,1)");
  return done ? r : r + gamma * max_next_q;
}

Vector augmented_observation(const Vector& obs, int last_action,
                             const std::vector<int>& parent_actions,
                             int num_agents, int num_actions) {
  if (static_cast<int>(parent_actions.size()) != num_agents) {
    throw DimensionError("augmented_observation: one parent slot per agent");
  }
  const int width = static_cast<int>(obs.size()) + num_actions +
                    num_agents * (num_actions + 1);
  Vector x = Vector::Zero(width);
  x.head(obs.size()) = obs;
  int off = static_cast<int>(obs.size());
  if (last_action >= 0) {
    if (last_action >= num_actions) throw ArgumentError("augmented_observation: bad last action");
    x[off + last_action] = 1.0;
  }
  off += num_actions;
  for (int j = 0; j < num_agents; ++j) {
    const int a = parent_actions[j];
    if (a >= 0) {
      if (a >= num_actions) throw ArgumentError("augmented_observation: bad parent action");
      x[off + a] = 1.0;
      x[off + num_actions] = 1.0;  // presence bit
    }
    off += num_actions + 1;
  }
  return x;
}

CoordPolicy::CoordPolicy(const PolicyConfig& cfg, double lr, double rms_alpha,
                         Rng& init_rng)
    : cfg_(cfg),
      actor_params_(std::make_unique<ParamStore>()),
      critic_params_(std::make_unique<ParamStore>()),
      target_actor_params_(std::make_unique<ParamStore>()),
      target_critic_params_(std::make_unique<ParamStore>()),
      actor_opt_(lr, rms_alpha),
      critic_opt_(lr, rms_alpha) {
  if (cfg_.num_agents < 1) throw ArgumentError("policy: num_agents must be >= 1");
  if (cfg_.num_actions < 1) throw ArgumentError("policy: num_actions must be >= 1");
  const int aug = augmented_width(cfg_);
  const int critic_in = cfg_.num_agents * (cfg_.obs_dim + cfg_.num_actions);
  for (int i = 0; i < cfg_.num_agents; ++i) {
    const std::string ap = "actor" + std::to_string(i);
    const std::string cp = "critic" + std::to_string(i);
    for (ParamStore* ps : {actor_params_.get(), target_actor_params_.get()}) {
      ActorNet net;
      net.in = DenseLayer::create(*ps, ap + ".in", aug, cfg_.hidden, Act::Relu, init_rng);
      net.gru = GruCell::create(*ps, ap + ".gru", cfg_.hidden, cfg_.hidden, init_rng);
      net.out = DenseLayer::create(*ps, ap + ".out", cfg_.hidden, cfg_.num_actions,
                                   Act::Linear, init_rng);
      (ps == actor_params_.get() ? actors_ : target_actors_).push_back(net);
    }
    for (ParamStore* ps : {critic_params_.get(), target_critic_params_.get()}) {
      CriticNet net;
      net.l1 = DenseLayer::create(*ps, cp + ".l1", critic_in, cfg_.critic_hidden,
                                  Act::Relu, init_rng);
      net.l2 = DenseLayer::create(*ps, cp + ".l2", cfg_.critic_hidden,
                                  cfg_.critic_hidden, Act::Relu, init_rng);
      net.l3 = DenseLayer::create(*ps, cp + ".l3", cfg_.critic_hidden, 1,
                                  Act::Linear, init_rng);
      (ps == critic_params_.get() ? critics_ : target_critics_).push_back(net);
    }
  }
  sync_targets();
}

void CoordPolicy::sync_targets() {
  target_actor_params_->copy_values_from(*actor_params_);
  target_critic_params_->copy_values_from(*critic_params_);
}

std::vector<Vector> CoordPolicy::initial_hidden() const {
  return std::vector<Vector>(cfg_.num_agents, Vector::Zero(cfg_.hidden));
}

Vector CoordPolicy::action_probs(int agent, const Vector& augmented,
                                 const Vector& hidden, Vector* hidden_out) const {
  const ActorNet& net = actors_.at(agent);
  const Vector h1 = net.in.forward(augmented);
  const Vector h2 = net.gru.step(h1, hidden);
  if (hidden_out) *hidden_out = h2;
  return softmax(net.out.forward(h2));
}

namespace {

void check_order_consistency(const Matrix& dag, const std::vector<int>& order) {
  const int d = static_cast<int>(dag.rows());
  if (static_cast<int>(order.size()) != d) {
    throw ConsistencyError("order length does not match graph size");
  }
  std::vector<int> pos(d, -1);
  for (int p = 0; p < d; ++p) {
    const int node = order[p];
    if (node < 0 || node >= d || pos[node] != -1) {
      throw ConsistencyError("order is not a permutation of the agents");
    }
    pos[node] = p;
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (dag(i, j) != 0.0 && pos[i] >= pos[j]) {
        throw ConsistencyError("order violates an edge of the graph");
      }
    }
  }
}

}  // namespace

ActResult CoordPolicy::act_impl(const std::vector<ActorNet>& nets,
                                const Matrix& dag,
                                const std::vector<int>& order,
                                const std::vector<Vector>& obs,
                                const std::vector<int>& last_actions,
                                const std::vector<Vector>& hidden, double eps,
                                ActMode mode, Rng* rng) const {
  const int d = cfg_.num_agents;
  if (dag.rows() != d || dag.cols() != d) throw DimensionError("act: graph size mismatch");
  if (static_cast<int>(obs.size()) != d || static_cast<int>(last_actions.size()) != d ||
      static_cast<int>(hidden.size()) != d) {
    throw DimensionError("act: expected per-agent obs, last action and hidden state");
  }
  if (eps < 0.0 || eps > 1.0) throw ArgumentError("act: eps must be in [0,1]");
  check_order_consistency(dag, order);

  ActResult res;
  res.actions.assign(d, -1);
  res.hidden.resize(d);
  res.logprobs.assign(d, 0.0);
  const double u_mix = eps / cfg_.num_actions;
  for (int node : order) {
    std::vector<int> parent_actions(d, -1);
    for (int p : dagmath::parents_of(dag, node)) {
      parent_actions[p] = res.actions[p];
    }
    const Vector aug = augmented_observation(obs[node], last_actions[node],
                                             parent_actions, d, cfg_.num_actions);
    const ActorNet& net = nets[node];
    const Vector h1 = net.in.forward(aug);
    const Vector h2 = net.gru.step(h1, hidden[node]);
    const Vector probs = softmax(net.out.forward(h2));
    const Vector mix = (1.0 - eps) * probs + Vector::Constant(probs.size(), u_mix);
    int a;
    if (mode == ActMode::Greedy) {
      a = argmax_action(mix);
    } else {
      if (!rng) throw ArgumentError("act: sampling requires an rng");
      a = sample_categorical(mix, *rng);
    }
    res.actions[node] = a;
    res.hidden[node] = h2;
    res.logprobs[node] = categorical_log_prob(mix, a);
  }
  return res;
}

ActResult CoordPolicy::act_in_order(const Matrix& dag, const std::vector<int>& order,
                                    const std::vector<Vector>& obs,
                                    const std::vector<int>& last_actions,
                                    const std::vector<Vector>& hidden, double eps,
                                    ActMode mode, Rng& rng) const {
  return act_impl(actors_, dag, order, obs, last_actions, hidden, eps, mode, &rng);
}

Vector CoordPolicy::critic_input(const Vector& state, const std::vector<int>& joint) const {
  const int d = cfg_.num_agents;
  if (static_cast<int>(joint.size()) != d) throw DimensionError("critic: joint action size");
  if (state.size() != d * cfg_.obs_dim) throw DimensionError("critic: state width mismatch");
  Vector x = Vector::Zero(d * (cfg_.obs_dim + cfg_.num_actions));
  x.head(state.size()) = state;
  int off = static_cast<int>(state.size());
  for (int i = 0; i < d; ++i) {
    const int a = joint[i];
    if (a < 0 || a >= cfg_.num_actions) throw ArgumentError("critic: action out of range");
    x[off + a] = 1.0;
    off += cfg_.num_actions;
  }
  return x;
}

double CoordPolicy::critic_forward(const CriticNet& net, const Vector& input,
                                   DenseCache* c1, DenseCache* c2,
                                   DenseCache* c3) const {
  const Vector h1 = net.l1.forward(input, c1);
  const Vector h2 = net.l2.forward(h1, c2);
  return net.l3.forward(h2, c3)[0];
}

double CoordPolicy::critic_value(int agent, const Vector& state,
                                 const std::vector<int>& joint_action) const {
  return critic_forward(critics_.at(agent), critic_input(state, joint_action),
                        nullptr, nullptr, nullptr);
}

namespace {

Vector concat_obs(const std::vector<Vector>& obs) {
  int width = 0;
  for (const auto& o : obs) width += static_cast<int>(o.size());
  Vector s(width);
  int off = 0;
  for (const auto& o : obs) {
    s.segment(off, o.size()) = o;
    off += static_cast<int>(o.size());
  }
  return s;
}

}  // namespace

double CoordPolicy::actor_update(const std::vector<const EpisodeRecord*>& batch,
                                 bool apply_step) {
  if (batch.empty()) throw ArgumentError("actor_update: empty batch");
  const int d = cfg_.num_agents;

  int total_steps = 0;
  for (const EpisodeRecord* ep : batch) total_steps += static_cast<int>(ep->steps.size());
  if (total_steps == 0) throw ArgumentError("actor_update: batch has no steps");
  const double inv_count = 1.0 / static_cast<double>(total_steps);

  // Q coefficients under the current critics, with a batch-mean baseline.
  std::vector<std::vector<std::vector<double>>> q(d);
  std::vector<double> mean_q(d, 0.0);
  for (int i = 0; i < d; ++i) {
    q[i].resize(batch.size());
    for (std::size_t n = 0; n < batch.size(); ++n) {
      const EpisodeRecord& ep = *batch[n];
      q[i][n].resize(ep.steps.size());
      for (std::size_t t = 0; t < ep.steps.size(); ++t) {
        const double v = critic_value(i, concat_obs(ep.steps[t].obs), ep.steps[t].actions);
        q[i][n][t] = v;
        mean_q[i] += v * inv_count;
      }
    }
  }

  double loss = 0.0;
  for (int i = 0; i < d; ++i) {
    const ActorNet& net = actors_[i];
    for (std::size_t n = 0; n < batch.size(); ++n) {
      const EpisodeRecord& ep = *batch[n];
      const std::size_t len = ep.steps.size();
      std::vector<DenseCache> in_c(len), out_c(len);
      std::vector<GruCache> gru_c(len);
      std::vector<Vector> probs(len);
      Vector h = Vector::Zero(cfg_.hidden);
      for (std::size_t t = 0; t < len; ++t) {
        const EpisodeStep& st = ep.steps[t];
        std::vector<int> parent_actions(d, -1);
        for (int p : dagmath::parents_of(st.gen.dag, i)) parent_actions[p] = st.actions[p];
        const Vector aug = augmented_observation(st.obs[i], st.last_actions[i],
                                                 parent_actions, d, cfg_.num_actions);
        const Vector x = net.in.forward(aug, &in_c[t]);
        h = net.gru.step(x, h, &gru_c[t]);
        probs[t] = softmax(net.out.forward(h, &out_c[t]));
      }
      Vector dh_carry = Vector::Zero(cfg_.hidden);
      for (int t = static_cast<int>(len) - 1; t >= 0; --t) {
        const int u = ep.steps[t].actions[i];
        const double coef = q[i][n][t] - mean_q[i];
        loss -= std::log(probs[t][u]) * coef * inv_count;
        Vector dlogits = probs[t] * (coef * inv_count);
        dlogits[u] -= coef * inv_count;
        Vector dh = net.out.backward(out_c[t], dlogits) + dh_carry;
        auto [dx, dh_prev] = net.gru.backward(gru_c[t], dh);
        net.in.backward(in_c[t], dx);
        dh_carry = dh_prev;
      }
    }
  }
  if (apply_step) actor_opt_.step(*actor_params_);
  return loss;
}

double CoordPolicy::critic_update(const std::vector<const EpisodeRecord*>& batch,
                                  double gamma, bool apply_step) {
  if (batch.empty()) throw ArgumentError("critic_update: empty batch");
  if (gamma <= 0.0 || gamma >= 1.0) throw ArgumentError("critic_update: gamma in (0,1)");
  const int d = cfg_.num_agents;

  int total_steps = 0;
  for (const EpisodeRecord* ep : batch) total_steps += static_cast<int>(ep->steps.size());
  if (total_steps == 0) throw ArgumentError("critic_update: batch has no steps");
  const double inv_count = 1.0 / static_cast<double>(total_steps);

  double loss = 0.0;
  for (const EpisodeRecord* ep_ptr : batch) {
    const EpisodeRecord& ep = *ep_ptr;
    const std::size_t len = ep.steps.size();

    // Teacher-forced hidden replay of the frozen target actors, keeping the
    // pre-step state so greedy next actions can branch off it.
    std::vector<std::vector<Vector>> h_pre(len + 1);
    h_pre[0].assign(d, Vector::Zero(cfg_.hidden));
    for (std::size_t t = 0; t < len; ++t) {
      h_pre[t + 1].resize(d);
      const EpisodeStep& st = ep.steps[t];
      for (int i = 0; i < d; ++i) {
        std::vector<int> parent_actions(d, -1);
        for (int p : dagmath::parents_of(st.gen.dag, i)) parent_actions[p] = st.actions[p];
        const Vector aug = augmented_observation(st.obs[i], st.last_actions[i],
                                                 parent_actions, d, cfg_.num_actions);
        const ActorNet& net = target_actors_[i];
        h_pre[t + 1][i] = net.gru.step(net.in.forward(aug), h_pre[t][i]);
      }
    }

    for (std::size_t t = 0; t < len; ++t) {
      const EpisodeStep& st = ep.steps[t];
      std::vector<double> next_q(d, 0.0);
      if (!st.done) {
        const bool in_record = t + 1 < len;
        const std::vector<Vector>& next_obs = in_record ? ep.steps[t + 1].obs : ep.final_obs;
        Matrix next_dag;
        std::vector<int> next_order;
        if (in_record) {
          next_dag = ep.steps[t + 1].gen.dag;
          next_order = ep.steps[t + 1].gen.order;
        } else if (ep.final_dag.size() > 0) {
          next_dag = ep.final_dag;
          next_order = ep.final_order;
        } else {
          next_dag = Matrix::Zero(d, d);
          next_order.resize(d);
          for (int i = 0; i < d; ++i) next_order[i] = i;
        }
        if (next_obs.empty()) throw ArgumentError("critic_update: missing next observations");
        const ActResult greedy =
            act_impl(target_actors_, next_dag, next_order, next_obs, st.actions,
                     h_pre[t + 1], 0.0, ActMode::Greedy, nullptr);
        const Vector next_state = concat_obs(next_obs);
        for (int i = 0; i < d; ++i) {
          next_q[i] = critic_forward(target_critics_[i],
                                     critic_input(next_state, greedy.actions),
                                     nullptr, nullptr, nullptr);
        }
      }
      const Vector state = concat_obs(st.obs);
      for (int i = 0; i < d; ++i) {
        const double y = td_target(st.reward, st.done, gamma, next_q[i]);
        DenseCache c1, c2, c3;
        const double qv = critic_forward(critics_[i], critic_input(state, st.actions),
                                         &c1, &c2, &c3);
        const double err = qv - y;
        loss += err * err * inv_count;
        const Vector dq = Vector::Constant(1, 2.0 * err * inv_count);
        const Vector d2 = critics_[i].l3.backward(c3, dq);
        const Vector d1 = critics_[i].l2.backward(c2, d2);
        critics_[i].l1.backward(c1, d1);
      }
    }
  }
  if (apply_step) critic_opt_.step(*critic_params_);
  return loss;
}

}  // namespace acgm
