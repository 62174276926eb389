#pragma once

// Head-to-head matches, Elo ratings and round-robin-free random league play.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "taac/metrics.hpp"
#include "taac/policy.hpp"
#include "taac/replay.hpp"

namespace taac {

enum class Outcome { win_a, win_b, tie };

// Standard Elo with a shared K; the pair sum is conserved.
std::pair<double, double> elo_update(double r_a, double r_b, Outcome outcome, double k);

class EloTable {
 public:
  EloTable(std::size_t teams, double k = 32.0, double initial = 1200.0);

  void record(std::size_t a, std::size_t b, Outcome outcome);
  double rating(std::size_t team) const { return ratings_.at(team); }
  const std::vector<double>& ratings() const { return ratings_; }
  // history()[t] is the rating vector after t recorded matches.
  const std::vector<std::vector<double>>& history() const { return history_; }
  std::size_t matches() const { return history_.size() - 1; }
  double k() const { return k_; }

 private:
  double k_;
  std::vector<double> ratings_;
  std::vector<std::vector<double>> history_;
};

struct GoalEvent {
  int step = 0;
  int episode = 0;
  int team = 0;  // 0: side a, 1: side b
};

struct MatchRecord {
  std::size_t team_a = 0;
  std::size_t team_b = 0;
  std::uint64_t seed = 0;
  std::array<int, 2> score{0, 0};
  std::vector<GoalEvent> goals;
  std::vector<int> episode_lengths;
  std::array<CollabMetrics, 2> collab;
  std::string replay_path;

  int goal_differential() const { return score[0] - score[1]; }
  Outcome outcome() const;
  bool operator==(const MatchRecord& o) const;
};

struct MatchOptions {
  soccer::SpawnMode spawn = soccer::SpawnMode::random_spawns;
  ConnectivityBand band;
  // Team b stands still (stage-1 style evaluation).
  bool b_inactive = false;
};

// Team a plays side 0 (attacking east), team b side 1. Each side acts in its
// canonical frame. When `replay` is given the frames are appended to it.
MatchRecord play_match(const TeamPolicy& a, const TeamPolicy& b, const soccer::EnvConfig& env, std::uint64_t seed,
                       const MatchOptions& options = {}, Replay* replay = nullptr);

struct LeagueTeam {
  std::string name;
  SnapshotPtr snapshot;
};

struct LeagueConfig {
  int games = 400;
  double k = 32.0;
  double initial_rating = 1200.0;
  ConnectivityBand band;
  soccer::SpawnMode spawn = soccer::SpawnMode::random_spawns;
  bool save_replays = false;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

struct TeamCollab {
  MeanStd distance;
  MeanStd swaps;
  MeanStd connectivity;
};

struct LeagueReport {
  std::vector<std::string> teams;
  std::vector<MatchRecord> matches;
  std::vector<std::vector<double>> elo_history;
  std::vector<double> final_elo;
  std::vector<std::vector<int>> wins;            // wins[i][j]: games i won against j
  std::vector<std::vector<int>> goal_diff;       // summed score_i - score_j
  std::vector<std::array<int, 3>> record;        // per team: wins, losses, ties
  std::vector<TeamCollab> collab;
};

// Pairings are drawn uniformly (ordered, distinct) from `seed`; matches run on
// up to `threads` workers and Elo is applied in schedule order.
LeagueReport run_league(const std::vector<LeagueTeam>& teams, const soccer::EnvConfig& env, const LeagueConfig& cfg,
                        std::uint64_t seed, int threads = 1,
                        const std::filesystem::path& replay_dir = {});

// league_report.json and matches.csv under `dir`.
void write_league_report(const std::filesystem::path& dir, const LeagueReport& report);
std::string league_report_json(const LeagueReport& report);
std::string matches_csv(const LeagueReport& report);

}  // namespace taac
