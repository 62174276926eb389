#include "taac/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace taac {

using soccer::Vec2;

double pairwise_distance(std::span<const Vec2> positions) {
  const std::size_t n = positions.size();
  if (n < 2) throw std::invalid_argument("pairwise_distance: need at least two players");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) total += soccer::distance(positions[i], positions[j]);
  return total / static_cast<double>(n * (n - 1) / 2);
}

namespace {

std::vector<Vec2> team_positions(const soccer::WorldState& s, int team, const soccer::EnvConfig& cfg) {
  std::vector<Vec2> out;
  for (int i = team * cfg.team_size; i < (team + 1) * cfg.team_size; ++i) out.push_back(s.players.at(i).position);
  return out;
}

}  // namespace

double pairwise_distance(const soccer::WorldState& s, int team, const soccer::EnvConfig& cfg) {
  return pairwise_distance(team_positions(s, team, cfg));
}

int possession_swaps(std::span<const soccer::Touch> touches, int team) {
  int swaps = 0;
  int possessor = -1;
  int possessor_team = -1;
  for (const auto& t : touches) {
    if (t.team == team && possessor_team == team && t.player != possessor) ++swaps;
    possessor = t.player;
    possessor_team = t.team;
  }
  return swaps;
}

bool segment_obstructed(Vec2 a, Vec2 b, Vec2 center, double radius) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  double t = len2 > 0.0 ? (center - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return soccer::distance(a + ab * t, center) < radius;
}

double connectivity(std::span<const Vec2> players, std::span<const int> members, double radius,
                    ConnectivityBand band) {
  const std::size_t n = members.size();
  if (n < 2) throw std::invalid_argument("connectivity: need at least two team members");
  int connected = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec2 a = players[static_cast<std::size_t>(members[i])];
      const Vec2 b = players[static_cast<std::size_t>(members[j])];
      const double d = soccer::distance(a, b);
      if (d < band.d_min || d > band.d_max) continue;
      bool clear = true;
      for (std::size_t k = 0; k < players.size() && clear; ++k) {
        if (static_cast<int>(k) == members[i] || static_cast<int>(k) == members[j]) continue;
        if (segment_obstructed(a, b, players[k], radius)) clear = false;
      }
      if (clear) ++connected;
    }
  }
  return static_cast<double>(connected) / static_cast<double>(n * (n - 1) / 2);
}

double connectivity(const soccer::WorldState& s, int team, const soccer::EnvConfig& cfg, ConnectivityBand band) {
  std::vector<Vec2> all;
  for (const auto& p : s.players) all.push_back(p.position);
  std::vector<int> members;
  for (int i = team * cfg.team_size; i < (team + 1) * cfg.team_size; ++i) members.push_back(i);
  return connectivity(all, members, cfg.player_radius, band);
}

CollabAccumulator::CollabAccumulator(int team, const soccer::EnvConfig& cfg, ConnectivityBand band)
    : team_(team), cfg_(cfg), band_(band) {}

void CollabAccumulator::add_frame(const soccer::WorldState& s, std::span<const soccer::Touch> touches) {
  ++frames_;
  distance_sum_ += pairwise_distance(s, team_, cfg_);
  connectivity_sum_ += connectivity(s, team_, cfg_, band_);
  for (const auto& t : touches) {
    if (t.team == team_ && last_toucher_ >= 0 && team_of(last_toucher_, cfg_) == team_ && t.player != last_toucher_)
      ++swaps_;
    last_toucher_ = t.player;
  }
}

CollabMetrics CollabAccumulator::result() const {
  CollabMetrics m;
  m.possession_swaps = swaps_;
  if (frames_ == 0) return m;
  m.mean_distance = distance_sum_ / static_cast<double>(frames_);
  m.connectivity = connectivity_sum_ / static_cast<double>(frames_);
  return m;
}

}  // namespace taac
