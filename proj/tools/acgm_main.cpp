#include "acgm/checkpoint.hpp"
#include "acgm/dagmath.hpp"
#include "acgm/fixed_dag.hpp"
#include "acgm/trainer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace acgm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNan = 3;

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& body) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw FormatError("cannot open " + tmp.string() + " for writing");
    os << body;
  }
  fs::rename(tmp, path);
}

std::string header_block(const std::string& title, const std::string& echo) {
  std::ostringstream os;
  os << "# acgm " << title << " v1\n";
  os << "# build " << build_id() << "\n";
  std::istringstream in(echo);
  std::string line;
  while (std::getline(in, line)) os << "# " << line << "\n";
  return os.str();
}

std::vector<long> parse_drop_list(const std::string& spec) {
  std::vector<long> drops;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "inf") {
      drops.push_back(-1);
    } else {
      std::size_t pos = 0;
      const long v = std::stol(item, &pos);
      if (pos != item.size() || v < 0) {
        throw ConfigError("edge-drop: bad drop count '" + item + "'");
      }
      drops.push_back(v);
    }
  }
  if (drops.empty()) throw ConfigError("edge-drop: empty drop list");
  return drops;
}

int cmd_train(const std::string& cfg_path) {
  RunConfig cfg = parse_config_file(cfg_path);
  apply_env_overrides(cfg);
  TrainSession session(cfg);
  const TrainResult res = session.run(true);
  std::cout << "episodes " << res.episodes_run << "\n"
            << "metrics " << res.metrics_path << "\n"
            << "checkpoint " << res.final_checkpoint_path << "\n";
  if (res.aborted_nan) {
    std::cerr << "aborted: " << res.diagnostic << "\n";
    return kExitNan;
  }
  return kExitOk;
}

int cmd_eval(const std::string& ckpt_path, long episodes,
             const std::string& override_token, std::uint64_t seed_flag) {
  LoadedModel model = load_model(ckpt_path);
  const std::uint64_t seed = seed_flag != 0 ? seed_flag : model.cfg.run_seed + 0x5EEDu;
  auto env = make_env(model.cfg, seed);
  GraphOverride ov;
  const GraphOverride* ov_ptr = nullptr;
  if (override_token != "none") {
    const auto fixed = parse_graph_override(override_token, env->num_agents());
    if (fixed) {
      ov = GraphOverride::fixed_graph(*fixed);
      ov_ptr = &ov;
    }
  }
  const EvalSummary s =
      evaluate_policy(*env, *model.generator, *model.policy, episodes, seed,
                      model.cfg.train_gamma, model.cfg.gen_depth_k, ov_ptr);
  std::cout << "episodes " << s.episodes << "\n"
            << "mean_return " << fmt9(s.mean_return) << "\n"
            << "std_return " << fmt9(s.std_return) << "\n"
            << "mean_reward_sum " << fmt9(s.mean_reward_sum) << "\n"
            << "mean_edges " << fmt9(s.mean_edges) << "\n"
            << "mean_nilpotent " << fmt9(s.mean_nilpotent) << "\n"
            << "violation_rate " << fmt9(s.violation_rate) << "\n";
  return kExitOk;
}

int cmd_depth_sweep(const std::string& cfg_path, const std::string& k_spec,
                    long eval_episodes) {
  RunConfig base = parse_config_file(cfg_path);
  apply_env_overrides(base);
  std::vector<int> ks;
  {
    std::stringstream ss(k_spec);
    std::string item;
    while (std::getline(ss, item, ',')) ks.push_back(std::stoi(item));
    if (ks.empty()) throw ConfigError("depth-sweep: empty k list");
  }
  std::ostringstream csv;
  csv << header_block("depth-sweep", base.echo());
  csv << "depth,mean_return,std_return,violation_rate\n";
  for (int k : ks) {
    if (k < 1) throw ConfigError("depth-sweep: k must be >= 1");
    RunConfig cfg = base;
    cfg.gen_depth_k = k;
    cfg.run_outdir = (fs::path(base.run_outdir) / ("k" + std::to_string(k))).string();
    cfg.run_id = base.run_id + "-k" + std::to_string(k);
    TrainSession session(cfg);
    const TrainResult res = session.run(true);
    if (res.aborted_nan) {
      std::cerr << "aborted at k=" << k << ": " << res.diagnostic << "\n";
      return kExitNan;
    }
    auto env = make_env(cfg, cfg.resolved_env_seed() + 0xEA1u);
    const EvalSummary s =
        evaluate_policy(*env, session.generator(), session.policy(), eval_episodes,
                        cfg.run_seed + 0x5EEDu, cfg.train_gamma, k);
    csv << k << ',' << fmt9(s.mean_return) << ',' << fmt9(s.std_return) << ','
        << fmt9(s.violation_rate) << '\n';
  }
  const fs::path out = fs::path(base.run_outdir) / "depth_sweep.csv";
  fs::create_directories(base.run_outdir);
  write_atomic(out, csv.str());
  std::cout << csv.str();
  return kExitOk;
}

int cmd_edge_drop(const std::string& ckpt_path, const std::string& drops_spec,
                  long episodes, bool baseline, std::uint64_t seed_flag) {
  LoadedModel model = load_model(ckpt_path);
  const std::vector<long> drops = parse_drop_list(drops_spec);
  const std::uint64_t seed = seed_flag != 0 ? seed_flag : model.cfg.run_seed + 0x5EEDu;
  std::ostringstream csv;
  csv << header_block("edge-drop", model.cfg.echo());
  csv << "drop,mean_return,std_return\n";
  for (long drop : drops) {
    auto env = make_env(model.cfg, seed);
    GraphOverride ov;
    if (baseline) {
      Matrix fixed = fixed_baseline_dag();
      if (fixed.rows() != env->num_agents()) {
        throw ConfigError("edge-drop --baseline needs a 10-agent environment");
      }
      ov.fixed = fixed;
    }
    ov.drop_count = drop;
    const EvalSummary s =
        evaluate_policy(*env, *model.generator, *model.policy, episodes, seed,
                        model.cfg.train_gamma, model.cfg.gen_depth_k, &ov);
    csv << (drop < 0 ? std::string("inf") : std::to_string(drop)) << ','
        << fmt9(s.mean_return) << ',' << fmt9(s.std_return) << '\n';
  }
  const fs::path out = fs::path(model.cfg.run_outdir) / "edge_drop.csv";
  fs::create_directories(model.cfg.run_outdir);
  write_atomic(out, csv.str());
  std::cout << csv.str();
  return kExitOk;
}

int cmd_dag_check(const std::string& path) {
  const Matrix m = read_matrix_file(path);
  dagmath::validate_adjacency(m);
  std::cout << "nodes " << m.rows() << "\n";
  std::cout << "edges " << dagmath::edge_count(m) << "\n";
  const bool acyclic = dagmath::is_acyclic(m);
  std::cout << "acyclic " << (acyclic ? "true" : "false") << "\n";
  const auto ni = dagmath::nilpotent_index(m);
  std::cout << "nilpotent_index " << (ni ? std::to_string(*ni) : std::string("none"))
            << "\n";
  if (acyclic) {
    std::cout << "longest_path_edges " << dagmath::longest_path_edges(m) << "\n";
    std::cout << "order";
    for (int v : dagmath::topological_order(m)) std::cout << ' ' << v;
    std::cout << "\n";
  } else {
    const auto cycle = dagmath::find_cycle(m);
    std::cout << "cycle";
    for (int v : cycle) std::cout << ' ' << v << " ->";
    std::cout << ' ' << cycle.front() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"action-coordination-graph training and evaluation"};
  app.require_subcommand(1);

  std::string cfg_path, ckpt_path, matrix_path;
  std::string override_token = "none";
  std::string k_spec, drops_spec;
  long episodes = 1000;
  bool baseline = false;
  std::uint64_t seed_flag = 0;

  auto* train = app.add_subcommand("train", "train from a config file");
  train->add_option("config", cfg_path, "config file")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
  eval->add_option("--episodes", episodes, "evaluation episodes");
  eval->add_option("--override", override_token,
                   "graph override: empty, g528, or a matrix file");
  eval->add_option("--seed", seed_flag, "evaluation seed (0 = derived)");

  auto* sweep = app.add_subcommand("depth-sweep", "train and evaluate per depth bound");
  sweep->add_option("config", cfg_path, "config file")->required();
  sweep->add_option("--k", k_spec, "comma-separated depth bounds")->required();
  sweep->add_option("--episodes", episodes, "evaluation episodes per depth");

  auto* drop = app.add_subcommand("edge-drop", "evaluate under edge dropping");
  drop->add_option("checkpoint", ckpt_path, "checkpoint file")->required();
  drop->add_option("--drops", drops_spec, "comma-separated counts, inf allowed")->required();
  drop->add_option("--episodes", episodes, "evaluation episodes per level");
  drop->add_flag("--baseline", baseline, "substitute the fixed 28-edge baseline graph");
  drop->add_option("--seed", seed_flag, "evaluation seed (0 = derived)");

  auto* check = app.add_subcommand("dag-check", "inspect a 0/1 adjacency matrix file");
  check->add_option("file", matrix_path, "matrix file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(cfg_path);
    if (eval->parsed()) return cmd_eval(ckpt_path, episodes, override_token, seed_flag);
    if (sweep->parsed()) return cmd_depth_sweep(cfg_path, k_spec, episodes);
    if (drop->parsed()) return cmd_edge_drop(ckpt_path, drops_spec, episodes, baseline, seed_flag);
    if (check->parsed()) return cmd_dag_check(matrix_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNan;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitRuntime;
}
