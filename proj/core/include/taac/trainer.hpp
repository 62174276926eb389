#pragma once

// Curriculum driver: rollouts from frozen snapshots, single-threaded updates,
// periodic snapshots and checkpoint/resume.
//
// Output directory layout:
//   config.json            effective configuration
//   train_log.jsonl        one record per update
//   snapshots/NNNNNN.json  league snapshots, named by games played
//   checkpoint.json        learner state for resuming
//   final_snapshot.json    policy after the last stage

#include <functional>
#include <memory>
#include <string>

#include "taac/config.hpp"

namespace taac {

struct TrainResult {
  PolicySnapshot final_snapshot;
  int games = 0;
  int updates = 0;
  bool resumed = false;
};

std::unique_ptr<Learner> make_learner(const RunConfig& cfg);
// Seed used to initialise the learner's parameters.
std::uint64_t init_seed(const RunConfig& cfg);

// `on_update` receives each log record as it is written.
TrainResult run_curriculum(const RunConfig& cfg, const std::function<void(const std::string&)>& on_update = {});

}  // namespace taac
