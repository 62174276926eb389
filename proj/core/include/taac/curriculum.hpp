#pragma once

// Four-stage curriculum: stage specs, the self-play snapshot league and
// rollout collection.

#include <array>
#include <cstdint>
#include <vector>

#include "taac/policy.hpp"
#include "taac/trajectory.hpp"

namespace taac {

enum class OpponentSource { inactive, random, league };

struct CurriculumConfig {
  // Games played in stages 1..4; promotion happens on these counts.
  std::array<int, 4> stage_games{1000, 1000, 2000, 2000};
  int games_per_update = 4;
  int snapshot_interval = 500;

  bool operator==(const CurriculumConfig&) const = default;
};

struct StageSpec {
  int tag = 1;
  soccer::SpawnMode spawn = soccer::SpawnMode::random_spawns;
  OpponentSource opponent = OpponentSource::inactive;
  int games = 0;
};

// Stages in order 1, 2, 3, 4.
std::vector<StageSpec> stage_specs(const CurriculumConfig& cfg);

// Archive of frozen past policies.
class SnapshotLeague {
 public:
  // Stores a private copy; later changes to `snap` do not reach the league.
  void add(const PolicySnapshot& snap);
  // Uniform draw. Throws std::logic_error when empty.
  SnapshotPtr sample(Rng& rng) const;
  std::size_t size() const { return snapshots_.size(); }
  bool empty() const { return snapshots_.empty(); }
  const std::vector<SnapshotPtr>& snapshots() const { return snapshots_; }

 private:
  std::vector<SnapshotPtr> snapshots_;
};

struct GameRollout {
  std::vector<Trajectory> episodes;  // learner team, canonical frame
  int goals_for = 0;
  int goals_against = 0;
};

// Plays one game with the learner on `learner_side`. An inactive opponent
// requires learner_side 0.
GameRollout collect_game(const TeamPolicy& learner, const TeamPolicy& opponent, const soccer::EnvConfig& env,
                         soccer::SpawnMode spawn, bool opponent_active, int learner_side, std::uint64_t seed);

}  // namespace taac
