#pragma once

// Match replays as JSONL: one header line, then one line per frame.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "taac/metrics.hpp"
#include "taac/soccer.hpp"

namespace taac {

struct ReplayFrame {
  int step = 0;
  int episode = 0;
  std::vector<soccer::Vec2> players;
  soccer::Vec2 ball;
  soccer::Vec2 ball_velocity;
  std::array<int, 2> score{0, 0};
  soccer::JointAction actions;
  std::vector<soccer::Touch> touches;
  std::optional<int> goal_scored;

  bool operator==(const ReplayFrame&) const = default;
};

struct Replay {
  std::string team_a;  // side 0
  std::string team_b;  // side 1
  std::uint64_t seed = 0;
  soccer::EnvConfig env;
  std::vector<ReplayFrame> frames;
};

// Post-step frame; `touches` are the touches of that step.
ReplayFrame make_frame(const soccer::StepResult& r, const soccer::JointAction& actions);

void write_replay(const std::filesystem::path& path, const Replay& replay);
Replay read_replay(const std::filesystem::path& path);

// Tidy per-frame CSV: positions, score and per-team collaboration metrics
// (swap columns are cumulative counts).
void export_replay_csv(const Replay& replay, std::ostream& out, ConnectivityBand band = {});

}  // namespace taac
