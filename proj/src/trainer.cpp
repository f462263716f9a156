#include "acgm/trainer.hpp"

#include "acgm/checkpoint.hpp"
#include "acgm/dagmath.hpp"
#include "acgm/fixed_dag.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace acgm {

namespace fs = std::filesystem;

const std::string& build_id() {
#ifdef ACGM_BUILD_ID
  static const std::string id = ACGM_BUILD_ID;
#else
  static const std::string id = "unknown";
#endif
  return id;
}

HyperParams HyperParams::from_config(const RunConfig& cfg) {
  HyperParams hp;
  hp.gamma = cfg.train_gamma;
  hp.lr = cfg.train_lr;
  hp.rms_alpha = cfg.train_rms_alpha;
  hp.eps_start = cfg.train_eps_start;
  hp.eps_end = cfg.train_eps_end;
  hp.eps_anneal_steps = cfg.train_eps_anneal_steps;
  hp.batch_episodes = cfg.train_batch_episodes;
  hp.target_sync = cfg.train_target_sync;
  hp.lagrangian_every = cfg.train_lagrangian_every;
  hp.warmup_episodes = cfg.train_warmup_episodes;
  hp.buffer_capacity = cfg.train_buffer_capacity;
  hp.depth_k = cfg.gen_depth_k;
  return hp;
}

double epsilon_at(long step, const HyperParams& hp) {
  if (step < 0) step = 0;
  if (step >= hp.eps_anneal_steps) return hp.eps_end;
  const double frac = static_cast<double>(step) / static_cast<double>(hp.eps_anneal_steps);
  return hp.eps_start + (hp.eps_end - hp.eps_start) * frac;
}

GraphOverride GraphOverride::fixed_graph(Matrix dag) {
  GraphOverride ov;
  ov.fixed = std::move(dag);
  return ov;
}

GraphOverride GraphOverride::drop_edges(long count) {
  GraphOverride ov;
  ov.drop_count = count;
  return ov;
}

GeneratorOutput apply_override(const GeneratorOutput& out, const GraphOverride& ov,
                               Rng& drop_rng) {
  GeneratorOutput res = out;
  if (ov.fixed) res.dag = *ov.fixed;
  if (ov.drop_count) {
    const int d = static_cast<int>(res.dag.rows());
    if (*ov.drop_count < 0) {
      res.dag = Matrix::Zero(d, d);
    } else {
      std::vector<std::pair<int, int>> edges;
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          if (res.dag(i, j) != 0.0) edges.emplace_back(i, j);
        }
      }
      const long n_drop = std::min<long>(*ov.drop_count, static_cast<long>(edges.size()));
      // partial Fisher-Yates: the first n_drop entries are a uniform subset
      for (long k = 0; k < n_drop; ++k) {
        const int pick =
            static_cast<int>(k) + drop_rng.uniform_int(static_cast<int>(edges.size() - k));
        std::swap(edges[k], edges[pick]);
        res.dag(edges[k].first, edges[k].second) = 0.0;
      }
    }
  }
  res.order = dagmath::topological_order(res.dag);
  return res;
}

EpisodeRecord run_episode(Env& env, const GraphSource& source,
                          const ActionSelector& policy, double eps, ActMode mode,
                          double gamma, Rng& gen_rng, Rng& act_rng,
                          const GraphOverride* ov, Rng* drop_rng) {
  const int d = env.num_agents();
  EpisodeRecord rec;
  std::vector<Vector> obs = env.reset();
  std::vector<Vector> hidden = policy.initial_hidden();
  std::vector<int> last_actions(d, -1);
  for (;;) {
    EpisodeStep step;
    step.obs = obs;
    step.last_actions = last_actions;
    step.gen = source.generate(obs, last_actions, gen_rng);
    if (ov) {
      if (ov->drop_count && !drop_rng) {
        throw ArgumentError("run_episode: edge dropping needs an rng");
      }
      Rng dummy(0);
      step.gen = apply_override(step.gen, *ov, drop_rng ? *drop_rng : dummy);
    }
    const ActResult act = policy.act_in_order(step.gen.dag, step.gen.order, obs,
                                              last_actions, hidden, eps, mode,
                                              act_rng);
    const StepResult sr = env.step(act.actions);
    step.actions = act.actions;
    step.reward = sr.reward;
    step.done = sr.done;
    rec.steps.push_back(std::move(step));
    hidden = act.hidden;
    last_actions = act.actions;
    obs = sr.obs;
    if (sr.done) {
      rec.final_obs = sr.obs;
      break;
    }
  }
  rec.finalize(gamma);
  return rec;
}

EvalSummary evaluate_policy(Env& env, const GraphSource& source,
                            const ActionSelector& policy, long episodes,
                            std::uint64_t seed, double gamma, int depth_k,
                            const GraphOverride* ov) {
  EvalSummary s;
  if (episodes <= 0) return s;
  Rng base(seed);
  Rng gen_rng = base.fork(11);
  Rng act_rng = base.fork(12);
  Rng drop_rng = base.fork(13);
  double sum = 0.0, sum_sq = 0.0;
  long steps = 0, edge_sum = 0;
  double nilp_sum = 0.0;
  long violations = 0;
  for (long e = 0; e < episodes; ++e) {
    const EpisodeRecord rec = run_episode(env, source, policy, 0.0, ActMode::Greedy,
                                          gamma, gen_rng, act_rng, ov, &drop_rng);
    sum += rec.discounted_return;
    sum_sq += rec.discounted_return * rec.discounted_return;
    s.mean_reward_sum += rec.reward_sum;
    for (const EpisodeStep& st : rec.steps) {
      ++steps;
      edge_sum += dagmath::edge_count(st.gen.dag);
      const auto ni = dagmath::nilpotent_index(st.gen.dag);
      nilp_sum += ni ? static_cast<double>(*ni) : 0.0;
      if (st.gen.repaired || (ni && *ni > depth_k)) ++violations;
    }
  }
  s.episodes = episodes;
  s.mean_return = sum / static_cast<double>(episodes);
  s.std_return = std::sqrt(std::max(0.0, sum_sq / static_cast<double>(episodes) -
                                             s.mean_return * s.mean_return));
  s.mean_reward_sum /= static_cast<double>(episodes);
  if (steps > 0) {
    s.mean_edges = static_cast<double>(edge_sum) / static_cast<double>(steps);
    s.mean_nilpotent = nilp_sum / static_cast<double>(steps);
    s.violation_rate = static_cast<double>(violations) / static_cast<double>(steps);
  }
  return s;
}

std::unique_ptr<Env> make_env(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.env_name == "coordgame") return std::make_unique<CoordGameEnv>(seed);
  if (cfg.env_name == "cgs") {
    return std::make_unique<CgsEnv>(cfg.resolved_agents(), cfg.resolved_episode_len(),
                                    seed, cfg.env_terminal_reward_only);
  }
  if (cfg.env_name == "nav") {
    return std::make_unique<NavEnv>(cfg.resolved_agents(), cfg.resolved_episode_len(), seed);
  }
  throw ConfigError("env.name: unknown environment '" + cfg.env_name + "'");
}

Matrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open matrix file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof() && ls.fail()) throw FormatError("matrix file: non-numeric entry");
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("matrix file: empty");
  const std::size_t n = rows.size();
  for (const auto& r : rows) {
    if (r.size() != n) throw FormatError("matrix file: ragged rows");
  }
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::optional<Matrix> parse_graph_override(const std::string& token, int agents) {
  if (token == "none") return std::nullopt;
  if (token == "empty") return Matrix::Zero(agents, agents);
  if (token == "g528") {
    Matrix m = fixed_baseline_dag();
    if (m.rows() != agents) {
      throw ConfigError("graph override g528 needs a 10-agent environment");
    }
    return m;
  }
  Matrix m = read_matrix_file(token);
  if (m.rows() != agents) throw ConfigError("graph override size does not match agents");
  dagmath::validate_adjacency(m);
  if (!dagmath::is_acyclic(m)) throw ConfigError("graph override must be acyclic");
  return m;
}

// ---------------------------------------------------------------------------
// TrainSession

TrainSession::TrainSession(const RunConfig& cfg)
    : cfg_(cfg),
      hp_(HyperParams::from_config(cfg)),
      gen_opt_(cfg.train_lr, cfg.train_rms_alpha),
      master_(cfg.run_seed),
      gen_rng_(master_.fork(1)),
      act_rng_(master_.fork(2)),
      replay_rng_(master_.fork(3)),
      eval_gen_rng_(master_.fork(6)),
      eval_act_rng_(master_.fork(7)) {
  cfg_.validate();
  env_ = make_env(cfg_, cfg_.resolved_env_seed());
  eval_env_ = make_env(cfg_, cfg_.resolved_env_seed() + 0xE7A1u);

  GeneratorConfig gc;
  gc.num_agents = env_->num_agents();
  gc.obs_dim = env_->obs_dim();
  gc.num_actions = env_->num_actions();
  gc.feature_hidden = cfg_.gen_feature_hidden;
  gc.hidden = cfg_.gen_hidden;
  gc.attn_layers = cfg_.gen_attn_layers;
  gc.heads = cfg_.gen_heads;
  Rng gen_init = master_.fork(4);
  generator_ = std::make_unique<GraphGenerator>(gc, gen_init);

  PolicyConfig pc;
  pc.num_agents = env_->num_agents();
  pc.obs_dim = env_->obs_dim();
  pc.num_actions = env_->num_actions();
  pc.hidden = cfg_.policy_hidden;
  pc.critic_hidden = cfg_.policy_critic_hidden;
  Rng pol_init = master_.fork(5);
  policy_ = std::make_unique<CoordPolicy>(pc, hp_.lr, hp_.rms_alpha, pol_init);

  buffer_ = std::make_unique<ReplayBuffer>(hp_.buffer_capacity);
  lag_.depth_k = hp_.depth_k;

  const auto fixed = parse_graph_override(cfg_.train_graph_override, env_->num_agents());
  if (fixed) override_source_ = std::make_unique<FixedGraphSource>(*fixed);
}

TrainSession::~TrainSession() = default;

void TrainSession::save_checkpoint_file(const std::string& path) const {
  Checkpoint ckpt;
  ckpt.add_store(generator_->params());
  ckpt.add_store(policy_->actor_params());
  ckpt.add_store(policy_->critic_params());
  ckpt.config_echo = cfg_.echo();
  save_checkpoint(ckpt, path);
}

namespace {

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

TrainResult TrainSession::run(bool write_files) {
  TrainResult result;
  result.lag = lag_;

  const fs::path outdir = cfg_.run_outdir;
  fs::path metrics_tmp, metrics_final;
  std::ofstream metrics;
  if (write_files) {
    fs::create_directories(outdir);
    metrics_final = outdir / "metrics.csv";
    metrics_tmp = outdir / "metrics.csv.tmp";
    metrics.open(metrics_tmp, std::ios::trunc);
    if (!metrics) throw FormatError("cannot open metrics file for writing");
    metrics << "# acgm metrics v1\n";
    metrics << "# build " << build_id() << "\n";
    std::istringstream echo(cfg_.echo());
    std::string line;
    while (std::getline(echo, line)) metrics << "# " << line << "\n";
    metrics << "episode,steps,return,eval_return,g_value,c_value,xi,lambda1,lambda2,"
               "epsilon,edges_mean,nilpotent_mean,repair_rate,actor_loss,critic_loss\n";
  }

  const GraphSource& source =
      override_source_ ? static_cast<const GraphSource&>(*override_source_)
                       : static_cast<const GraphSource&>(*generator_);
  const bool train_generator = override_source_ == nullptr;

  double actor_loss = 0.0, critic_loss = 0.0;
  double eval_return = 0.0;

  for (long episode = 0; episode < cfg_.train_episodes; ++episode) {
    const double eps = epsilon_at(env_steps_, hp_);
    EpisodeRecord rec = run_episode(*env_, source, *policy_, eps, ActMode::Sample,
                                    hp_.gamma, gen_rng_, act_rng_);
    const long ep_steps = static_cast<long>(rec.steps.size());
    env_steps_ += ep_steps;

    // rollout diagnostics
    double g_mean = 0.0, c_mean = 0.0, edges = 0.0, nilp = 0.0, repair = 0.0;
    for (const EpisodeStep& st : rec.steps) {
      g_mean += dagmath::acyclicity_value(st.gen.weights);
      c_mean += dagmath::depth_value(st.gen.weights, hp_.depth_k);
      edges += dagmath::edge_count(st.gen.dag);
      const auto ni = dagmath::nilpotent_index(st.gen.dag);
      nilp += ni ? static_cast<double>(*ni) : 0.0;
      repair += st.gen.repaired ? 1.0 : 0.0;
    }
    const double inv_steps = 1.0 / static_cast<double>(rec.steps.size());
    g_mean *= inv_steps;
    c_mean *= inv_steps;
    edges *= inv_steps;
    nilp *= inv_steps;
    repair *= inv_steps;

    result.train_returns.push_back(rec.discounted_return);
    buffer_->push(std::move(rec));

    try {
      if (static_cast<long>(buffer_->size()) > hp_.warmup_episodes) {
        const auto batch = buffer_->sample(hp_.batch_episodes, replay_rng_);
        actor_loss = policy_->actor_update(batch);
        if (train_generator) {
          std::vector<GraphGenerator::Sample> samples;
          for (const EpisodeRecord* ep : batch) {
            for (const EpisodeStep& st : ep->steps) {
              GraphGenerator::Sample s;
              s.obs = &st.obs;
              s.last_actions = &st.last_actions;
              s.sampled = &st.gen.sampled;
              s.score = ep->discounted_return;
              samples.push_back(s);
            }
          }
          const auto stats = generator_->accumulate_gradient(samples, lag_);
          gen_opt_.step(generator_->params());
          if ((updates_ + 1) % hp_.lagrangian_every == 0) {
            lag_ = lagrangian_step(lag_, stats.mean_g, stats.mean_c);
          }
        }
        critic_loss = policy_->critic_update(batch, hp_.gamma);
        ++updates_;
        if (updates_ % hp_.target_sync == 0) policy_->sync_targets();
      }
    } catch (const NumericError& e) {
      result.aborted_nan = true;
      result.diagnostic = e.what();
    }

    if (cfg_.train_eval_episodes_per_row > 0) {
      double sum = 0.0;
      for (int k = 0; k < cfg_.train_eval_episodes_per_row; ++k) {
        sum += run_episode(*eval_env_, source, *policy_, 0.0, ActMode::Greedy,
                           hp_.gamma, eval_gen_rng_, eval_act_rng_)
                   .discounted_return;
      }
      eval_return = sum / cfg_.train_eval_episodes_per_row;
    }
    result.eval_returns.push_back(eval_return);
    result.episodes_run = episode + 1;

    if (write_files) {
      metrics << episode << ',' << ep_steps << ','
              << fmt9(result.train_returns.back()) << ',' << fmt9(eval_return) << ','
              << fmt9(g_mean) << ',' << fmt9(c_mean) << ',' << fmt9(lag_.xi) << ','
              << fmt9(lag_.lambda1) << ',' << fmt9(lag_.lambda2) << ',' << fmt9(eps)
              << ',' << fmt9(edges) << ',' << fmt9(nilp) << ',' << fmt9(repair) << ','
              << fmt9(actor_loss) << ',' << fmt9(critic_loss) << '\n';
    }

    if (result.aborted_nan) break;

    if (write_files && cfg_.train_ckpt_every > 0 &&
        (episode + 1) % cfg_.train_ckpt_every == 0) {
      save_checkpoint_file((outdir / ("ckpt_" + std::to_string(episode + 1) + ".acgm"))
                               .string());
    }
  }

  result.lag = lag_;
  if (write_files) {
    metrics.close();
    fs::rename(metrics_tmp, metrics_final);
    result.metrics_path = metrics_final.string();
    const fs::path final_ckpt = outdir / "ckpt_final.acgm";
    save_checkpoint_file(final_ckpt.string());
    result.final_checkpoint_path = final_ckpt.string();
  }
  return result;
}

LoadedModel load_model(const std::string& ckpt_path) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  LoadedModel m;
  m.cfg = parse_config_text(ckpt.config_echo);
  auto env = make_env(m.cfg, 1);

  GeneratorConfig gc;
  gc.num_agents = env->num_agents();
  gc.obs_dim = env->obs_dim();
  gc.num_actions = env->num_actions();
  gc.feature_hidden = m.cfg.gen_feature_hidden;
  gc.hidden = m.cfg.gen_hidden;
  gc.attn_layers = m.cfg.gen_attn_layers;
  gc.heads = m.cfg.gen_heads;
  Rng gen_init(1);
  m.generator = std::make_unique<GraphGenerator>(gc, gen_init);
  ckpt.load_into(m.generator->params());

  PolicyConfig pc;
  pc.num_agents = env->num_agents();
  pc.obs_dim = env->obs_dim();
  pc.num_actions = env->num_actions();
  pc.hidden = m.cfg.policy_hidden;
  pc.critic_hidden = m.cfg.policy_critic_hidden;
  Rng pol_init(2);
  m.policy = std::make_unique<CoordPolicy>(pc, m.cfg.train_lr, m.cfg.train_rms_alpha,
                                           pol_init);
  ckpt.load_into(m.policy->actor_params());
  ckpt.load_into(m.policy->critic_params());
  m.policy->sync_targets();
  return m;
}

}  // namespace acgm
