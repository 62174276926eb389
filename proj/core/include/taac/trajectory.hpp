#pragma once

#include <cstddef>
#include <vector>

namespace taac {

// One team's view of one environment step, in the team's canonical frame.
struct Transition {
  std::vector<double> observations;       // team_size x obs_dim, row-major
  std::vector<int> actions;               // team_size
  std::vector<double> log_probs;          // behaviour log-probabilities, team_size
  std::vector<double> rewards;            // team_size
  std::vector<double> next_observations;  // team_size x obs_dim
  bool episode_done = false;
  int step = 0;
};

// One episode of one team.
struct Trajectory {
  std::size_t team_size = 0;
  std::size_t obs_dim = 0;
  std::vector<Transition> transitions;
  // returns[t][i] once compute_returns has run.
  std::vector<std::vector<double>> returns;

  std::size_t length() const { return transitions.size(); }
};

// G[t][i] = sum_{k>=t} gamma^(k-t) r[k][i], by backward recursion. Throws
// std::invalid_argument when gamma lies outside [0, 1] or the episode is
// incomplete (last transition not marked done).
std::vector<std::vector<double>> compute_returns(const Trajectory& traj, double gamma);
// Computes and caches returns on every trajectory.
void attach_returns(std::vector<Trajectory>& batch, double gamma);

}  // namespace taac
