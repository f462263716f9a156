#include "acgm/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace acgm {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected integer, got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

const std::map<std::string, Field>& schema() {
  static const std::map<std::string, Field> s = [] {
    std::map<std::string, Field> m;
    auto add_int = [&m](const std::string& key, int RunConfig::*field) {
      m[key] = {[key, field](RunConfig& c, const std::string& v) {
                  c.*field = static_cast<int>(parse_long(key, v));
                },
                [field](const RunConfig& c) { return std::to_string(c.*field); }};
    };
    auto add_long = [&m](const std::string& key, long RunConfig::*field) {
      m[key] = {[key, field](RunConfig& c, const std::string& v) {
                  c.*field = parse_long(key, v);
                },
                [field](const RunConfig& c) { return std::to_string(c.*field); }};
    };
    auto add_u64 = [&m](const std::string& key, std::uint64_t RunConfig::*field) {
      m[key] = {[key, field](RunConfig& c, const std::string& v) {
                  c.*field = static_cast<std::uint64_t>(parse_long(key, v));
                },
                [field](const RunConfig& c) { return std::to_string(c.*field); }};
    };
    auto add_double = [&m](const std::string& key, double RunConfig::*field) {
      m[key] = {[key, field](RunConfig& c, const std::string& v) {
                  c.*field = parse_double(key, v);
                },
                [field](const RunConfig& c) { return fmt_double(c.*field); }};
    };
    auto add_bool = [&m](const std::string& key, bool RunConfig::*field) {
      m[key] = {[key, field](RunConfig& c, const std::string& v) {
                  c.*field = parse_bool(key, v);
                },
                [field](const RunConfig& c) { return c.*field ? "true" : "false"; }};
    };
    auto add_string = [&m](const std::string& key, std::string RunConfig::*field) {
      m[key] = {[field](RunConfig& c, const std::string& v) { c.*field = v; },
                [field](const RunConfig& c) { return c.*field; }};
    };

    add_string("env.name", &RunConfig::env_name);
    add_int("env.agents", &RunConfig::env_agents);
    add_int("env.episode_len", &RunConfig::env_episode_len);
    add_u64("env.seed", &RunConfig::env_seed);
    add_bool("env.terminal_reward_only", &RunConfig::env_terminal_reward_only);

    add_int("gen.depth_k", &RunConfig::gen_depth_k);
    add_int("gen.feature_hidden", &RunConfig::gen_feature_hidden);
    add_int("gen.hidden", &RunConfig::gen_hidden);
    add_int("gen.attn_layers", &RunConfig::gen_attn_layers);
    add_int("gen.heads", &RunConfig::gen_heads);

    add_int("policy.hidden", &RunConfig::policy_hidden);
    add_int("policy.critic_hidden", &RunConfig::policy_critic_hidden);

    add_long("train.episodes", &RunConfig::train_episodes);
    add_double("train.gamma", &RunConfig::train_gamma);
    add_double("train.lr", &RunConfig::train_lr);
    add_double("train.rms_alpha", &RunConfig::train_rms_alpha);
    add_double("train.eps_start", &RunConfig::train_eps_start);
    add_double("train.eps_end", &RunConfig::train_eps_end);
    add_long("train.eps_anneal_steps", &RunConfig::train_eps_anneal_steps);
    add_int("train.batch_episodes", &RunConfig::train_batch_episodes);
    add_int("train.target_sync", &RunConfig::train_target_sync);
    add_int("train.lagrangian_every", &RunConfig::train_lagrangian_every);
    add_int("train.warmup_episodes", &RunConfig::train_warmup_episodes);
    add_int("train.buffer_capacity", &RunConfig::train_buffer_capacity);
    add_int("train.eval_episodes_per_row", &RunConfig::train_eval_episodes_per_row);
    add_long("train.ckpt_every", &RunConfig::train_ckpt_every);
    add_string("train.graph_override", &RunConfig::train_graph_override);

    add_u64("run.seed", &RunConfig::run_seed);
    add_string("run.outdir", &RunConfig::run_outdir);
    add_string("run.id", &RunConfig::run_id);
    return m;
  }();
  return s;
}

}  // namespace

int RunConfig::resolved_agents() const {
  if (env_agents > 0) return env_agents;
  if (env_name == "coordgame") return 2;
  if (env_name == "cgs") return 10;
  if (env_name == "nav") return 3;
  throw ConfigError("env.name: unknown environment '" + env_name + "'");
}

int RunConfig::resolved_episode_len() const {
  if (env_episode_len > 0) return env_episode_len;
  if (env_name == "coordgame") return 1;
  if (env_name == "cgs") return 10;
  if (env_name == "nav") return 25;
  throw ConfigError("env.name: unknown environment '" + env_name + "'");
}

std::uint64_t RunConfig::resolved_env_seed() const {
  return env_seed != 0 ? env_seed : run_seed * 0x9e3779b9u + 17;
}

void RunConfig::validate() const {
  if (env_name.empty()) throw ConfigError("env.name: required");
  if (env_name != "coordgame" && env_name != "cgs" && env_name != "nav") {
    throw ConfigError("env.name: must be one of coordgame, cgs, nav");
  }
  if (env_name == "coordgame" && env_agents != 0 && env_agents != 2) {
    throw ConfigError("env.agents: coordgame is a two-agent task");
  }
  if (env_name == "coordgame" && env_episode_len != 0 && env_episode_len != 1) {
    throw ConfigError("env.episode_len: coordgame episodes have length 1");
  }
  if (env_agents < 0 || env_agents > 64) throw ConfigError("env.agents: out of range");
  if (gen_depth_k < 1) throw ConfigError("gen.depth_k: must be >= 1");
  if (gen_feature_hidden < 1 || gen_hidden < 1) throw ConfigError("gen: widths must be positive");
  if (gen_attn_layers < 1) throw ConfigError("gen.attn_layers: must be >= 1");
  if (gen_heads < 1) throw ConfigError("gen.heads: must be >= 1");
  if (policy_hidden < 1 || policy_critic_hidden < 1) {
    throw ConfigError("policy: widths must be positive");
  }
  if (train_episodes < 1) throw ConfigError("train.episodes: must be >= 1");
  if (train_gamma <= 0.0 || train_gamma >= 1.0) throw ConfigError("train.gamma: in (0,1)");
  if (train_lr <= 0.0) throw ConfigError("train.lr: must be positive");
  if (train_rms_alpha <= 0.0 || train_rms_alpha >= 1.0) {
    throw ConfigError("train.rms_alpha: in (0,1)");
  }
  if (train_eps_start < 0.0 || train_eps_start > 1.0 || train_eps_end < 0.0 ||
      train_eps_end > 1.0) {
    throw ConfigError("train.eps_*: must be in [0,1]");
  }
  if (train_eps_end > train_eps_start) {
    throw ConfigError("train.eps_end: must not exceed train.eps_start");
  }
  if (train_eps_anneal_steps < 1) throw ConfigError("train.eps_anneal_steps: must be >= 1");
  if (train_batch_episodes < 1) throw ConfigError("train.batch_episodes: must be >= 1");
  if (train_target_sync < 1) throw ConfigError("train.target_sync: must be >= 1");
  if (train_lagrangian_every < 1) throw ConfigError("train.lagrangian_every: must be >= 1");
  if (train_warmup_episodes < 0) throw ConfigError("train.warmup_episodes: must be >= 0");
  if (train_buffer_capacity < 1) throw ConfigError("train.buffer_capacity: must be >= 1");
  if (train_eval_episodes_per_row < 0) {
    throw ConfigError("train.eval_episodes_per_row: must be >= 0");
  }
  if (train_ckpt_every < 0) throw ConfigError("train.ckpt_every: must be >= 0");
  if (run_outdir.empty()) throw ConfigError("run.outdir: must not be empty");
}

std::string RunConfig::echo() const {
  std::ostringstream os;
  for (const auto& [key, field] : schema()) {
    os << key << " = " << field.get(*this) << "\n";
  }
  return os.str();
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = schema().find(key);
    if (it == schema().end()) {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    it->second.set(cfg, value);
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_env_overrides(RunConfig& cfg) {
  if (const char* seed = std::getenv("ACGM_SEED")) {
    cfg.run_seed = static_cast<std::uint64_t>(parse_long("ACGM_SEED", seed));
  }
}

}  // namespace acgm
