#pragma once

// Deterministic 2D soccer: circles on a rectangular pitch with goal boxes
// behind the west (x = 0) and east (x = length) goal lines.
//
// Team 0 defends the west goal and attacks east; team 1 the reverse. North is
// +y. Player ids are 0..2k-1 with team = id / k for team size k.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "taac/rng.hpp"

namespace taac::soccer {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  bool operator==(const Vec2&) const = default;
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  // Unit vector, or zero for the zero vector.
  Vec2 normalized() const {
    const double n = norm();
    return n > 0.0 ? Vec2{x / n, y / n} : Vec2{};
  }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

struct EnvConfig {
  double pitch_length = 100.0;
  double pitch_width = 60.0;
  double player_radius = 1.5;
  double ball_radius = 1.0;
  double player_speed = 1.0;
  double kick_impulse = 3.0;
  double wall_restitution = 0.9;
  double ball_damping = 0.99;
  double goal_width = 20.0;
  double goal_depth = 3.0;
  int steps_per_game = 2000;
  int team_size = 3;
  double theta_explore = 0.01;
  double theta_ball = 0.05;
  double theta_dist = 0.001;
  double theta_max = 20.0;
  double goal_reward = 10.0;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the offending field.
  void validate() const;
  int player_count() const { return 2 * team_size; }
};

struct PlayerState {
  Vec2 position;
  Vec2 velocity;
  bool kicking = false;
  bool operator==(const PlayerState&) const = default;
};

struct BallState {
  Vec2 position;
  Vec2 velocity;
  bool operator==(const BallState&) const = default;
};

struct WorldState {
  std::vector<PlayerState> players;  // team 0 first, then team 1
  BallState ball;
  std::array<int, 2> score{0, 0};
  int step = 0;
  int episode = 0;
  std::array<bool, 2> team_active{true, true};

  bool operator==(const WorldState&) const = default;
};

inline int team_of(int player, const EnvConfig& cfg) { return player / cfg.team_size; }

// ---- actions --------------------------------------------------------------

inline constexpr int kActionCount = 18;

struct DecodedAction {
  int move_x = 0;  // -1 west, 0, +1 east
  int move_y = 0;  // -1 south, 0, +1 north
  bool kick = false;
  bool operator==(const DecodedAction&) const = default;
};

// id = 9 * kick + 3 * (move_y + 1) + (move_x + 1)
DecodedAction decode_action(int id);
int encode_action(DecodedAction a);
inline constexpr int kNoOpAction = 4;
// Unit-length movement direction (zero when standing still).
Vec2 move_direction(DecodedAction a);

// One action id per player, indexed by player id.
using JointAction = std::vector<int>;

// ---- observation ----------------------------------------------------------

// 2(k-1) teammates + 2k opponents + ball(2) + ball velocity(2) + opponent goal(2)
// + own goal(2) + raycasts N,E,W,S(4). 22 for 3v3.
int observation_width(const EnvConfig& cfg);
std::vector<double> observe(const WorldState& s, int player, const EnvConfig& cfg);

Vec2 goal_center(int defending_team, const EnvConfig& cfg);

// Point reflection through the pitch center with the two teams swapped:
// player i of team 0 becomes player i of team 1 and vice versa.
WorldState mirror_state(const WorldState& s, const EnvConfig& cfg);
int mirror_player(int player, const EnvConfig& cfg);
// The observation the mirrored player would see: every relative vector
// negated, raycasts N<->S and E<->W swapped.
std::vector<double> mirror_observation(const std::vector<double>& obs, const EnvConfig& cfg);
// Movement flipped in both axes; kick unchanged.
int mirror_action(int id);

// Team-relative view: team 1's observation is mirrored so every team sees
// itself attacking east. Policies act in this frame.
std::vector<double> observe_canonical(const WorldState& s, int player, const EnvConfig& cfg);
int canonical_to_world_action(int id, int team);

// ---- dynamics -------------------------------------------------------------

struct Touch {
  int player = 0;
  int team = 0;
  bool operator==(const Touch&) const = default;
};

struct WallHit {
  int axis = 0;  // 0: x, 1: y
  double incoming = 0.0;
  double outgoing = 0.0;
};

struct StepEvents {
  std::optional<int> goal_scored;  // scoring team
  std::vector<Touch> ball_touches;
  std::vector<WallHit> wall_hits;
  bool episode_done = false;
  bool game_done = false;
};

struct RewardBreakdown {
  double explore = 0.0;
  double ball = 0.0;
  double goal = 0.0;
  double dist = 0.0;
  double total() const { return explore + ball + goal + dist; }
};

std::vector<RewardBreakdown> reward_components(const WorldState& prev, const JointAction& actions,
                                               const WorldState& next, const EnvConfig& cfg);

struct StepResult {
  WorldState state;
  std::vector<double> rewards;
  std::vector<RewardBreakdown> breakdown;
  StepEvents events;
};

// Advances one step. Throws std::logic_error if the game is already over and
// std::invalid_argument on malformed actions. Actions of an inactive team are
// replaced by the no-op.
StepResult step(const WorldState& s, const JointAction& actions, const EnvConfig& cfg);

enum class SpawnMode { random_spawns, fixed_formation };

WorldState reset(const EnvConfig& cfg, SpawnMode mode, bool opponent_active, Rng& rng);
// New episode within the same game: positions re-spawned; score, step and
// activity flags kept; episode index incremented.
void respawn(WorldState& s, const EnvConfig& cfg, SpawnMode mode, Rng& rng);

// A full game of `steps_per_game` steps with automatic respawn after goals.
class Game {
 public:
  Game(EnvConfig cfg, SpawnMode mode, bool opponent_active, std::uint64_t seed);

  const WorldState& state() const { return state_; }
  const EnvConfig& config() const { return cfg_; }
  bool done() const { return state_.step >= cfg_.steps_per_game; }
  // The returned state is the post-step frame (before any respawn); state()
  // reflects the respawn.
  StepResult advance(const JointAction& actions);

 private:
  EnvConfig cfg_;
  SpawnMode mode_;
  Rng rng_;
  WorldState state_;
};

}  // namespace taac::soccer
