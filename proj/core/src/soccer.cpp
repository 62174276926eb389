#include "taac/soccer.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "taac/errors.hpp"

namespace taac::soccer {

namespace {

constexpr double kContactSlack = 1e-9;

void require(bool ok, const char* key, const std::string& message) {
  if (!ok) throw ConfigError(std::string("env.") + key, message);
}

Vec2 clamp_to_pitch(Vec2 p, double r, const EnvConfig& cfg) {
  return {std::clamp(p.x, r, cfg.pitch_length - r), std::clamp(p.y, r, cfg.pitch_width - r)};
}

double mouth_low(const EnvConfig& cfg) { return 0.5 * (cfg.pitch_width - cfg.goal_width); }
double mouth_high(const EnvConfig& cfg) { return 0.5 * (cfg.pitch_width + cfg.goal_width); }

bool fits_mouth(double y, const EnvConfig& cfg) {
  return y - cfg.ball_radius >= mouth_low(cfg) && y + cfg.ball_radius <= mouth_high(cfg);
}

// Reflects one velocity component against a wall if it points outward.
// `outward` is +1 when the wall lies in the positive direction.
void reflect(double& pos, double& vel, double wall, double outward, int axis, const EnvConfig& cfg,
             StepEvents& ev) {
  pos = wall;
  if (vel * outward > 0.0) {
    const double incoming = vel;
    vel = -cfg.wall_restitution * vel;
    ev.wall_hits.push_back({axis, incoming, vel});
  }
}

void resolve_ball_walls(double prev_x, BallState& b, const EnvConfig& cfg, StepEvents& ev) {
  const double r = cfg.ball_radius;
  const double L = cfg.pitch_length;
  const double W = cfg.pitch_width;

  if (b.position.y < r) reflect(b.position.y, b.velocity.y, r, -1.0, 1, cfg, ev);
  if (b.position.y > W - r) reflect(b.position.y, b.velocity.y, W - r, 1.0, 1, cfg, ev);

  // West end.
  if (b.position.x < r) {
    const bool was_inside = prev_x < r;
    if (was_inside || fits_mouth(b.position.y, cfg)) {
      if (b.position.y - r < mouth_low(cfg)) reflect(b.position.y, b.velocity.y, mouth_low(cfg) + r, -1.0, 1, cfg, ev);
      if (b.position.y + r > mouth_high(cfg)) reflect(b.position.y, b.velocity.y, mouth_high(cfg) - r, 1.0, 1, cfg, ev);
      if (b.position.x < -cfg.goal_depth + r) reflect(b.position.x, b.velocity.x, -cfg.goal_depth + r, -1.0, 0, cfg, ev);
    } else {
      reflect(b.position.x, b.velocity.x, r, -1.0, 0, cfg, ev);
    }
  }
  // East end.
  if (b.position.x > L - r) {
    const bool was_inside = prev_x > L - r;
    if (was_inside || fits_mouth(b.position.y, cfg)) {
      if (b.position.y - r < mouth_low(cfg)) reflect(b.position.y, b.velocity.y, mouth_low(cfg) + r, -1.0, 1, cfg, ev);
      if (b.position.y + r > mouth_high(cfg)) reflect(b.position.y, b.velocity.y, mouth_high(cfg) - r, 1.0, 1, cfg, ev);
      if (b.position.x > L + cfg.goal_depth - r) reflect(b.position.x, b.velocity.x, L + cfg.goal_depth - r, 1.0, 0, cfg, ev);
    } else {
      reflect(b.position.x, b.velocity.x, L - r, 1.0, 0, cfg, ev);
    }
  }
}

// Team whose goal box fully contains the ball, if any.
std::optional<int> goal_conceded_by(const BallState& b, const EnvConfig& cfg) {
  const double r = cfg.ball_radius;
  if (!fits_mouth(b.position.y, cfg)) return std::nullopt;
  if (b.position.x + r <= 0.0 && b.position.x - r >= -cfg.goal_depth) return 0;
  if (b.position.x - r >= cfg.pitch_length && b.position.x + r <= cfg.pitch_length + cfg.goal_depth) return 1;
  return std::nullopt;
}

void check_actions(const JointAction& actions, const EnvConfig& cfg) {
  if (static_cast<int>(actions.size()) != cfg.player_count()) {
    throw std::invalid_argument("step: expected " + std::to_string(cfg.player_count()) + " actions, got " +
                                std::to_string(actions.size()));
  }
  for (int a : actions) decode_action(a);
}

}  // namespace

void EnvConfig::validate() const {
  require(pitch_length > 0, "pitch_length", "must be positive");
  require(pitch_width > 0, "pitch_width", "must be positive");
  require(player_radius > 0, "player_radius", "must be positive");
  require(ball_radius > 0, "ball_radius", "must be positive");
  require(player_speed > 0, "player_speed", "must be positive");
  require(kick_impulse >= 0, "kick_impulse", "must be nonnegative");
  require(wall_restitution > 0 && wall_restitution <= 1, "wall_restitution", "must lie in (0, 1]");
  require(ball_damping > 0 && ball_damping <= 1, "ball_damping", "must lie in (0, 1]");
  require(goal_width > 0, "goal_width", "must be positive");
  require(goal_width < pitch_width, "goal_width", "must be smaller than pitch_width");
  require(goal_width > 2 * ball_radius, "goal_width", "must admit the ball");
  require(goal_depth > 2 * ball_radius, "goal_depth", "must be deeper than the ball diameter");
  require(steps_per_game >= 1, "steps_per_game", "must be at least 1");
  require(team_size >= 1, "team_size", "must be at least 1");
  require(theta_max >= 0, "theta_max", "must be nonnegative");
  require(theta_dist >= 0, "theta_dist", "must be nonnegative");
  require(2 * player_radius * (team_size + 1) < pitch_width, "player_radius", "players do not fit on the pitch");
}

// ---- actions --------------------------------------------------------------

DecodedAction decode_action(int id) {
  if (id < 0 || id >= kActionCount) {
    throw std::out_of_range("action id " + std::to_string(id) + " outside [0, 18)");
  }
  return {id % 3 - 1, (id / 3) % 3 - 1, id >= 9};
}

int encode_action(DecodedAction a) {
  if (a.move_x < -1 || a.move_x > 1 || a.move_y < -1 || a.move_y > 1) {
    throw std::out_of_range("encode_action: move components must lie in {-1, 0, 1}");
  }
  return (a.kick ? 9 : 0) + 3 * (a.move_y + 1) + (a.move_x + 1);
}

Vec2 move_direction(DecodedAction a) {
  return Vec2{static_cast<double>(a.move_x), static_cast<double>(a.move_y)}.normalized();
}

// ---- observation ----------------------------------------------------------

int observation_width(const EnvConfig& cfg) { return 2 * (cfg.team_size - 1) + 2 * cfg.team_size + 12; }

Vec2 goal_center(int defending_team, const EnvConfig& cfg) {
  return {defending_team == 0 ? 0.0 : cfg.pitch_length, 0.5 * cfg.pitch_width};
}

std::vector<double> observe(const WorldState& s, int player, const EnvConfig& cfg) {
  if (player < 0 || player >= cfg.player_count() || static_cast<int>(s.players.size()) != cfg.player_count()) {
    throw std::out_of_range("observe: invalid player id " + std::to_string(player));
  }
  const int team = team_of(player, cfg);
  const Vec2 me = s.players[player].position;
  std::vector<double> obs;
  obs.reserve(static_cast<std::size_t>(observation_width(cfg)));
  auto push = [&obs](Vec2 v) {
    obs.push_back(v.x);
    obs.push_back(v.y);
  };
  for (int j = team * cfg.team_size; j < (team + 1) * cfg.team_size; ++j)
    if (j != player) push(s.players[j].position - me);
  const int other = 1 - team;
  for (int j = other * cfg.team_size; j < (other + 1) * cfg.team_size; ++j) push(s.players[j].position - me);
  push(s.ball.position - me);
  push(s.ball.velocity);
  push(goal_center(other, cfg) - me);
  push(goal_center(team, cfg) - me);
  obs.push_back(cfg.pitch_width - me.y);   // N
  obs.push_back(cfg.pitch_length - me.x);  // E
  obs.push_back(me.x);                     // W
  obs.push_back(me.y);                     // S
  return obs;
}

int mirror_player(int player, const EnvConfig& cfg) {
  return player < cfg.team_size ? player + cfg.team_size : player - cfg.team_size;
}

WorldState mirror_state(const WorldState& s, const EnvConfig& cfg) {
  const Vec2 extent{cfg.pitch_length, cfg.pitch_width};
  WorldState m = s;
  for (int p = 0; p < cfg.player_count(); ++p) {
    const auto& src = s.players[p];
    auto& dst = m.players[mirror_player(p, cfg)];
    dst.position = extent - src.position;
    dst.velocity = src.velocity * -1.0;
    dst.kicking = src.kicking;
  }
  m.ball.position = extent - s.ball.position;
  m.ball.velocity = s.ball.velocity * -1.0;
  m.score = {s.score[1], s.score[0]};
  m.team_active = {s.team_active[1], s.team_active[0]};
  return m;
}

std::vector<double> mirror_observation(const std::vector<double>& obs, const EnvConfig& cfg) {
  const std::size_t w = static_cast<std::size_t>(observation_width(cfg));
  if (obs.size() != w) throw std::invalid_argument("mirror_observation: width mismatch");
  std::vector<double> m(w);
  for (std::size_t i = 0; i + 4 < w; ++i) m[i] = -obs[i];
  m[w - 4] = obs[w - 1];  // N <- S
  m[w - 3] = obs[w - 2];  // E <- W
  m[w - 2] = obs[w - 3];  // W <- E
  m[w - 1] = obs[w - 4];  // S <- N
  return m;
}

int mirror_action(int id) {
  DecodedAction a = decode_action(id);
  a.move_x = -a.move_x;
  a.move_y = -a.move_y;
  return encode_action(a);
}

std::vector<double> observe_canonical(const WorldState& s, int player, const EnvConfig& cfg) {
  auto obs = observe(s, player, cfg);
  return team_of(player, cfg) == 0 ? obs : mirror_observation(obs, cfg);
}

int canonical_to_world_action(int id, int team) { return team == 0 ? (decode_action(id), id) : mirror_action(id); }

// ---- rewards --------------------------------------------------------------

std::vector<RewardBreakdown> reward_components(const WorldState& prev, const JointAction& actions,
                                               const WorldState& next, const EnvConfig& cfg) {
  const int n = cfg.player_count();
  std::vector<RewardBreakdown> out(static_cast<std::size_t>(n));
  std::optional<int> scorer;
  if (next.score[0] > prev.score[0]) scorer = 0;
  if (next.score[1] > prev.score[1]) scorer = 1;

  for (int i = 0; i < n; ++i) {
    const int team = team_of(i, cfg);
    auto& r = out[static_cast<std::size_t>(i)];

    const Vec2 dir = next.team_active[team] ? move_direction(decode_action(actions[i])) : Vec2{};
    const Vec2 to_ball = (prev.ball.position - prev.players[i].position).normalized();
    r.explore = cfg.theta_explore * dir.dot(to_ball);

    const Vec2 to_goal = (goal_center(1 - team, cfg) - next.ball.position).normalized();
    r.ball = cfg.theta_ball * next.ball.velocity.dot(to_goal);

    if (scorer) r.goal = *scorer == team ? cfg.goal_reward : -cfg.goal_reward;

    if (cfg.team_size > 1) {
      double total = 0.0;
      for (int j = team * cfg.team_size; j < (team + 1) * cfg.team_size; ++j)
        if (j != i) total += distance(next.players[i].position, next.players[j].position);
      const double mean = total / static_cast<double>(cfg.team_size - 1);
      r.dist = cfg.theta_dist * std::min(mean, cfg.theta_max);
    }
  }
  return out;
}

// ---- dynamics -------------------------------------------------------------

StepResult step(const WorldState& s, const JointAction& actions, const EnvConfig& cfg) {
  if (s.step >= cfg.steps_per_game) throw std::logic_error("step: game already finished");
  check_actions(actions, cfg);
  const int n = cfg.player_count();
  const double pr = cfg.player_radius;
  const double br = cfg.ball_radius;

  JointAction applied = actions;
  for (int i = 0; i < n; ++i)
    if (!s.team_active[team_of(i, cfg)]) applied[i] = kNoOpAction;

  StepResult res;
  WorldState& w = res.state;
  w = s;

  // 1. movement
  for (int i = 0; i < n; ++i) {
    const DecodedAction a = decode_action(applied[i]);
    auto& p = w.players[i];
    p.velocity = move_direction(a) * cfg.player_speed;
    p.kicking = a.kick;
    p.position = clamp_to_pitch(p.position + p.velocity, pr, cfg);
  }

  // 2. player-player overlap, symmetric positional separation
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      auto& a = w.players[i];
      auto& b = w.players[j];
      const Vec2 d = b.position - a.position;
      const double dist = d.norm();
      if (dist >= 2.0 * pr) continue;
      const Vec2 normal = dist > 0.0 ? d * (1.0 / dist) : Vec2{1.0, 0.0};
      const double half = 0.5 * (2.0 * pr - dist);
      a.position = clamp_to_pitch(a.position - normal * half, pr, cfg);
      b.position = clamp_to_pitch(b.position + normal * half, pr, cfg);
    }
  }

  // 3. ball contact and kicks
  for (int i = 0; i < n; ++i) {
    const auto& p = w.players[i];
    const Vec2 d = w.ball.position - p.position;
    const double dist = d.norm();
    if (dist > pr + br + kContactSlack) continue;
    res.events.ball_touches.push_back({i, team_of(i, cfg)});
    const Vec2 normal = dist > 0.0 ? d * (1.0 / dist) : Vec2{1.0, 0.0};
    const double approach = (w.ball.velocity - p.velocity).dot(normal);
    if (approach < 0.0) w.ball.velocity -= normal * (2.0 * approach);
    if (p.kicking) w.ball.velocity += normal * cfg.kick_impulse;
    if (dist < pr + br) w.ball.position = p.position + normal * (pr + br);
  }

  // 4. ball integration
  const double prev_x = w.ball.position.x;
  w.ball.velocity = w.ball.velocity * cfg.ball_damping;
  w.ball.position += w.ball.velocity;

  // 5. walls and goal mouths
  resolve_ball_walls(prev_x, w.ball, cfg, res.events);
  if (auto conceded = goal_conceded_by(w.ball, cfg)) {
    const int scorer = 1 - *conceded;
    ++w.score[scorer];
    res.events.goal_scored = scorer;
    res.events.episode_done = true;
  }

  ++w.step;
  if (w.step >= cfg.steps_per_game) {
    res.events.game_done = true;
    res.events.episode_done = true;
  }

  // 6. rewards
  res.breakdown = reward_components(s, applied, w, cfg);
  res.rewards.reserve(res.breakdown.size());
  for (const auto& r : res.breakdown) res.rewards.push_back(r.total());
  return res;
}

// ---- spawning -------------------------------------------------------------

namespace {

void place_random(WorldState& s, const EnvConfig& cfg, Rng& rng) {
  std::vector<std::pair<Vec2, double>> placed;
  auto sample = [&](double r) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const Vec2 p{rng.uniform(r, cfg.pitch_length - r), rng.uniform(r, cfg.pitch_width - r)};
      bool ok = true;
      for (const auto& [q, rq] : placed) {
        if (distance(p, q) < r + rq) {
          ok = false;
          break;
        }
      }
      if (ok) {
        placed.emplace_back(p, r);
        return p;
      }
    }
    throw std::runtime_error("reset: could not place non-overlapping entities");
  };
  for (auto& p : s.players) p = PlayerState{sample(cfg.player_radius), {}, false};
  s.ball = BallState{sample(cfg.ball_radius), {}};
}

void place_formation(WorldState& s, const EnvConfig& cfg) {
  const double L = cfg.pitch_length;
  const double W = cfg.pitch_width;
  const int k = cfg.team_size;
  for (int i = 0; i < k; ++i) {
    Vec2 pos = i == 0 ? Vec2{0.15 * L, 0.5 * W}
                      : Vec2{0.35 * L, W * static_cast<double>(i) / static_cast<double>(k)};
    s.players[i] = PlayerState{pos, {}, false};
    s.players[i + k] = PlayerState{Vec2{L, W} - pos, {}, false};
  }
  s.ball = BallState{{0.5 * L, 0.5 * W}, {}};
}

}  // namespace

WorldState reset(const EnvConfig& cfg, SpawnMode mode, bool opponent_active, Rng& rng) {
  cfg.validate();
  WorldState s;
  s.players.resize(static_cast<std::size_t>(cfg.player_count()));
  s.team_active = {true, opponent_active};
  if (mode == SpawnMode::random_spawns) {
    place_random(s, cfg, rng);
  } else {
    place_formation(s, cfg);
  }
  return s;
}

void respawn(WorldState& s, const EnvConfig& cfg, SpawnMode mode, Rng& rng) {
  if (mode == SpawnMode::random_spawns) {
    place_random(s, cfg, rng);
  } else {
    place_formation(s, cfg);
  }
  ++s.episode;
}

Game::Game(EnvConfig cfg, SpawnMode mode, bool opponent_active, std::uint64_t seed)
    : cfg_(cfg), mode_(mode), rng_(seed), state_(reset(cfg_, mode, opponent_active, rng_)) {}

StepResult Game::advance(const JointAction& actions) {
  StepResult r = step(state_, actions, cfg_);
  state_ = r.state;
  if (r.events.goal_scored && !r.events.game_done) respawn(state_, cfg_, mode_, rng_);
  return r;
}

}  // namespace taac::soccer
