#pragma once

#include "acgm/common.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace acgm {

// Run configuration parsed from flat "section.key = value" text. Unknown
// keys are rejected; every value is validated against the schema below.
struct RunConfig {
  // env
  std::string env_name;  // required: coordgame | cgs | nav
  int env_agents = 0;                  // 0 = per-env default
  int env_episode_len = 0;             // 0 = per-env default
  std::uint64_t env_seed = 0;          // 0 = derive from run.seed
  bool env_terminal_reward_only = false;

  // generator
  int gen_depth_k = 5;
  int gen_feature_hidden = 64;
  int gen_hidden = 64;
  int gen_attn_layers = 4;
  int gen_heads = 8;

  // policy
  int policy_hidden = 64;
  int policy_critic_hidden = 64;

  // training
  long train_episodes = 2000;
  double train_gamma = 0.99;
  double train_lr = 5e-4;
  double train_rms_alpha = 0.99;
  double train_eps_start = 0.2;
  double train_eps_end = 0.05;
  long train_eps_anneal_steps = 50000;
  int train_batch_episodes = 32;
  int train_target_sync = 200;
  int train_lagrangian_every = 200;
  int train_warmup_episodes = 100;
  int train_buffer_capacity = 5000;
  int train_eval_episodes_per_row = 1;
  long train_ckpt_every = 0;  // 0 = final checkpoint only
  std::string train_graph_override = "none";  // none | empty | g528 | <matrix file>

  // run
  std::uint64_t run_seed = 1;
  std::string run_outdir = "out";
  std::string run_id = "run0";

  // Resolved helpers.
  int resolved_agents() const;
  int resolved_episode_len() const;
  std::uint64_t resolved_env_seed() const;

  void validate() const;

  // Canonical "key = value" echo, one line per key, sorted.
  std::string echo() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Applies the ACGM_SEED environment variable override, if present.
void apply_env_overrides(RunConfig& cfg);

}  // namespace acgm
