#pragma once

// Run configuration: one JSON object with optional sections. Missing keys
// take defaults, unknown keys are rejected with their dotted path.
//
//   {
//     "kind": "taac" | "taac_ablation" | "ppo" | "random",
//     "seed": 0, "output_dir": "runs/default", "threads": 1,
//     "env": {...}, "arch": {...}, "ablation": {...},
//     "learner": {"gamma", "actor_lr", "critic_lr", "max_grad_norm", "theta_s", "theta_b",
//                 "entropy_coef", "conformity", "advantage", "critic_target"},
//     "ppo": {"clip", "gae_lambda", "epochs", "minibatches", "value_coef", "entropy_coef",
//             "learning_rate", "max_grad_norm"},
//     "curriculum": {"stage_games": [4 ints], "games_per_update", "snapshot_interval"},
//     "league": {"games", "k", "initial_rating", "d_min", "d_max", "spawn", "save_replays"}
//   }
//
// arch.obs_dim defaults to the observation width implied by env.team_size.

#include <filesystem>
#include <string>
#include <string_view>

#include "taac/curriculum.hpp"
#include "taac/evaluation.hpp"
#include "taac/learner.hpp"
#include "taac/ppo.hpp"

namespace taac {

struct RunConfig {
  PolicyKind kind = PolicyKind::taac;
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  int threads = 1;
  soccer::EnvConfig env;
  ArchConfig arch;
  AblationConfig ablation;
  LearnerOptions learner;
  PpoOptions ppo;
  CurriculumConfig curriculum;
  LeagueConfig league;

  // Throws ConfigError naming the offending key path.
  void validate() const;
};

RunConfig parse_config_text(std::string_view text);
RunConfig parse_config(const std::filesystem::path& path);
// Full effective configuration, every key present.
std::string config_to_json(const RunConfig& cfg);
// Writes config.json into cfg.output_dir.
void echo_config(const RunConfig& cfg);

}  // namespace taac
