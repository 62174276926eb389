#pragma once

// Collaboration metrics over replay frames.

#include <span>
#include <vector>

#include "taac/soccer.hpp"

namespace taac {

struct ConnectivityBand {
  double d_min = 5.0;
  double d_max = 40.0;
};

// Mean of the N(N-1)/2 pairwise distances. Throws for fewer than two points.
double pairwise_distance(std::span<const soccer::Vec2> positions);
double pairwise_distance(const soccer::WorldState& s, int team, const soccer::EnvConfig& cfg);

// Possessor = last player to touch the ball. Counts changes of possessor
// between two distinct members of `team`; an opponent touch breaks the chain.
int possession_swaps(std::span<const soccer::Touch> touches, int team);

// True if the open segment a-b passes closer than `radius` to `center`.
bool segment_obstructed(soccer::Vec2 a, soccer::Vec2 b, soccer::Vec2 center, double radius);

// Fraction of member pairs within [d_min, d_max] whose connecting segment
// clears every other player circle. `players` holds every circle on the
// pitch; `members` indexes into it.
double connectivity(std::span<const soccer::Vec2> players, std::span<const int> members, double radius,
                    ConnectivityBand band);
double connectivity(const soccer::WorldState& s, int team, const soccer::EnvConfig& cfg, ConnectivityBand band);

struct CollabMetrics {
  double mean_distance = 0.0;
  double possession_swaps = 0.0;
  double connectivity = 0.0;
};

// Running per-frame averages for one team; swaps are a running count.
class CollabAccumulator {
 public:
  CollabAccumulator(int team, const soccer::EnvConfig& cfg, ConnectivityBand band);

  // Call once per frame with that frame's touches.
  void add_frame(const soccer::WorldState& s, std::span<const soccer::Touch> touches);
  // Forget the current possessor (new episode).
  void reset_possession() { last_toucher_ = -1; }
  CollabMetrics result() const;

 private:
  int team_;
  soccer::EnvConfig cfg_;
  ConnectivityBand band_;
  std::size_t frames_ = 0;
  double distance_sum_ = 0.0;
  double connectivity_sum_ = 0.0;
  int swaps_ = 0;
  int last_toucher_ = -1;
};

}  // namespace taac
