#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "taac/errors.hpp"
#include "taac/soccer.hpp"

using namespace taac;
using namespace taac::soccer;

namespace {

WorldState quiet_state(const EnvConfig& cfg) {
  Rng rng(0);
  WorldState s = reset(cfg, SpawnMode::fixed_formation, true, rng);
  return s;
}

// Players lined up along the south wall, far from anything interesting.
WorldState parked_state(const EnvConfig& cfg, Vec2 ball, Vec2 ball_velocity) {
  WorldState s = quiet_state(cfg);
  for (int i = 0; i < cfg.player_count(); ++i) s.players[i] = {{10.0 + 5.0 * i, 2.0}, {}, false};
  s.ball = {ball, ball_velocity};
  return s;
}

JointAction noop(const EnvConfig& cfg) { return JointAction(static_cast<std::size_t>(cfg.player_count()), kNoOpAction); }

JointAction random_joint(const EnvConfig& cfg, Rng& rng) {
  JointAction a(static_cast<std::size_t>(cfg.player_count()));
  for (int& x : a) x = static_cast<int>(rng.below(kActionCount));
  return a;
}

bool overlapping(const WorldState& s, const EnvConfig& cfg) {
  std::vector<std::pair<Vec2, double>> circles;
  for (const auto& p : s.players) circles.emplace_back(p.position, cfg.player_radius);
  circles.emplace_back(s.ball.position, cfg.ball_radius);
  for (std::size_t i = 0; i < circles.size(); ++i)
    for (std::size_t j = i + 1; j < circles.size(); ++j)
      if (distance(circles[i].first, circles[j].first) < circles[i].second + circles[j].second) return true;
  return false;
}

}  // namespace

TEST(Actions, EighteenDistinctNonContradictoryInputs) {
  std::set<std::tuple<int, int, bool>> seen;
  for (int id = 0; id < kActionCount; ++id) {
    const DecodedAction a = decode_action(id);
    EXPECT_GE(a.move_x, -1);
    EXPECT_LE(a.move_x, 1);
    EXPECT_GE(a.move_y, -1);
    EXPECT_LE(a.move_y, 1);
    seen.insert({a.move_x, a.move_y, a.kick});
    EXPECT_EQ(encode_action(a), id);
  }
  EXPECT_EQ(seen.size(), 18u);
}

TEST(Actions, NoOpIsStillAndNotKicking) {
  const DecodedAction a = decode_action(kNoOpAction);
  EXPECT_EQ(move_direction(a), Vec2{});
  EXPECT_FALSE(a.kick);
}

TEST(Actions, OutOfRangeIdsRejected) {
  EXPECT_THROW(decode_action(-1), std::out_of_range);
  EXPECT_THROW(decode_action(18), std::out_of_range);
}

TEST(Actions, DiagonalMovesHaveUnitLength) {
  for (int id = 0; id < kActionCount; ++id) {
    const Vec2 d = move_direction(decode_action(id));
    if (d == Vec2{}) continue;
    EXPECT_NEAR(d.norm(), 1.0, 1e-15) << id;
  }
}

TEST(Observe, RaycastsFromPitchCenter) {
  EnvConfig cfg;
  WorldState s = quiet_state(cfg);
  s.players[0].position = {50.0, 30.0};
  const auto o = observe(s, 0, cfg);
  ASSERT_EQ(o.size(), 22u);
  EXPECT_EQ(o[18], 30.0);
  EXPECT_EQ(o[19], 50.0);
  EXPECT_EQ(o[20], 50.0);
  EXPECT_EQ(o[21], 30.0);
}

TEST(Observe, BallAtPlayerPositionGivesZeroVector) {
  EnvConfig cfg;
  WorldState s = quiet_state(cfg);
  s.ball.position = s.players[1].position;
  const auto o = observe(s, 1, cfg);
  EXPECT_EQ(o[10], 0.0);
  EXPECT_EQ(o[11], 0.0);
}

TEST(Observe, BlocksFollowAscendingPlayerIndex) {
  EnvConfig cfg;
  Rng rng(3);
  const WorldState s = reset(cfg, SpawnMode::random_spawns, true, rng);
  const auto o = observe(s, 4, cfg);
  const Vec2 me = s.players[4].position;
  const int teammates[] = {3, 5};
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(o[2 * k], s.players[teammates[k]].position.x - me.x);
    EXPECT_EQ(o[2 * k + 1], s.players[teammates[k]].position.y - me.y);
  }
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(o[4 + 2 * k], s.players[k].position.x - me.x);
    EXPECT_EQ(o[5 + 2 * k], s.players[k].position.y - me.y);
  }
  // opponent goal (west for team 1) comes before the own goal
  EXPECT_EQ(o[14], 0.0 - me.x);
  EXPECT_EQ(o[16], 100.0 - me.x);
}

TEST(Observe, ReflectionOracle) {
  EnvConfig cfg;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    WorldState s = reset(cfg, SpawnMode::random_spawns, true, rng);
    s.ball.velocity = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
    const WorldState m = mirror_state(s, cfg);
    for (int p = 0; p < cfg.player_count(); ++p) {
      const auto o = observe(s, p, cfg);
      const auto om = observe(m, mirror_player(p, cfg), cfg);
      // Hand-built reflection: relative vectors negate, raycasts swap N<->S and E<->W.
      for (std::size_t i = 0; i < 18; ++i) EXPECT_NEAR(om[i], -o[i], 1e-12);
      EXPECT_NEAR(om[18], o[21], 1e-12);
      EXPECT_NEAR(om[19], o[20], 1e-12);
      EXPECT_NEAR(om[20], o[19], 1e-12);
      EXPECT_NEAR(om[21], o[18], 1e-12);
      const auto mo = mirror_observation(o, cfg);
      for (std::size_t i = 0; i < o.size(); ++i) EXPECT_NEAR(mo[i], om[i], 1e-12);
    }
  }
}

TEST(Observe, CanonicalViewOfTeamOneMatchesMirroredTeamZero) {
  EnvConfig cfg;
  Rng rng(11);
  const WorldState s = reset(cfg, SpawnMode::random_spawns, true, rng);
  const WorldState m = mirror_state(s, cfg);
  for (int p = 3; p < 6; ++p) {
    const auto c = observe_canonical(s, p, cfg);
    const auto ref = observe(m, mirror_player(p, cfg), cfg);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c[i], ref[i], 1e-12);
  }
  EXPECT_EQ(observe_canonical(s, 1, cfg), observe(s, 1, cfg));
}

TEST(Observe, CanonicalActionsFlipForTeamOne) {
  const int east_kick = encode_action({1, 1, true});
  EXPECT_EQ(canonical_to_world_action(east_kick, 0), east_kick);
  EXPECT_EQ(decode_action(canonical_to_world_action(east_kick, 1)), (DecodedAction{-1, -1, true}));
  for (int id = 0; id < kActionCount; ++id) EXPECT_EQ(mirror_action(mirror_action(id)), id);
}

TEST(Step, StillnessIsAFixedPoint) {
  EnvConfig cfg;
  const WorldState s = quiet_state(cfg);
  const StepResult r = step(s, noop(cfg), cfg);
  WorldState expected = s;
  expected.step = 1;
  EXPECT_EQ(r.state, expected);
  EXPECT_TRUE(r.events.ball_touches.empty());
}

TEST(Step, WallReflectionScalesNormalVelocity) {
  EnvConfig cfg;
  const WorldState s = parked_state(cfg, {50.0, 58.5}, {0.3, 2.0});
  const StepResult r = step(s, noop(cfg), cfg);
  ASSERT_EQ(r.events.wall_hits.size(), 1u);
  const double v_in = 2.0 * cfg.ball_damping;
  EXPECT_NEAR(r.state.ball.velocity.y, -cfg.wall_restitution * v_in, 1e-12);
  EXPECT_NEAR(r.state.ball.velocity.x, 0.3 * cfg.ball_damping, 1e-15);
  EXPECT_EQ(r.state.ball.position.y, cfg.pitch_width - cfg.ball_radius);
}

TEST(Step, SideWallOutsideMouthReflects) {
  EnvConfig cfg;
  const WorldState s = parked_state(cfg, {1.5, 10.0}, {-2.0, 0.0});
  const StepResult r = step(s, noop(cfg), cfg);
  ASSERT_EQ(r.events.wall_hits.size(), 1u);
  EXPECT_EQ(r.events.wall_hits[0].axis, 0);
  EXPECT_NEAR(r.state.ball.velocity.x, cfg.wall_restitution * 2.0 * cfg.ball_damping, 1e-12);
  EXPECT_FALSE(r.events.goal_scored);
}

TEST(Step, KickFromRestAlongCenterLine) {
  EnvConfig cfg;
  WorldState s = parked_state(cfg, {50.0, 30.0}, {});
  // Touching from the south-west at exact contact distance.
  const double reach = cfg.player_radius + cfg.ball_radius;
  const Vec2 dir = Vec2{1.0, 1.0}.normalized();
  s.players[0].position = s.ball.position - dir * reach;
  JointAction a = noop(cfg);
  a[0] = encode_action({0, 0, true});
  const StepResult r = step(s, a, cfg);
  const Vec2 v = r.state.ball.velocity;
  EXPECT_NEAR(v.norm(), cfg.kick_impulse * cfg.ball_damping, 1e-12);
  EXPECT_NEAR(v.x, v.y, 1e-12);
  EXPECT_GT(v.x, 0.0);
  ASSERT_EQ(r.events.ball_touches.size(), 1u);
  EXPECT_EQ(r.events.ball_touches[0].player, 0);
}

TEST(Step, KickWithoutContactDoesNothing) {
  EnvConfig cfg;
  const WorldState s = parked_state(cfg, {50.0, 30.0}, {});
  JointAction a = noop(cfg);
  a[0] = encode_action({0, 0, true});
  const StepResult r = step(s, a, cfg);
  EXPECT_EQ(r.state.ball.velocity, Vec2{});
}

TEST(Step, OverlapSeparatedSymmetrically) {
  EnvConfig cfg;
  WorldState s = parked_state(cfg, {80.0, 50.0}, {});
  s.players[0].position = {40.0, 30.0};
  s.players[3].position = {41.0, 30.0};
  const StepResult r = step(s, noop(cfg), cfg);
  EXPECT_NEAR(distance(r.state.players[0].position, r.state.players[3].position), 2 * cfg.player_radius, 1e-12);
  EXPECT_NEAR(r.state.players[0].position.x + r.state.players[3].position.x, 81.0, 1e-12);
}

TEST(Step, InactiveTeamStandsStill) {
  EnvConfig cfg;
  Rng rng(2);
  const WorldState s = reset(cfg, SpawnMode::random_spawns, false, rng);
  JointAction a(6, encode_action({1, 1, false}));
  const StepResult r = step(s, a, cfg);
  for (int p = 3; p < 6; ++p) EXPECT_EQ(r.state.players[p].velocity, Vec2{});
  EXPECT_NE(r.state.players[0].position, s.players[0].position);
}

TEST(Step, MalformedActionsRejected) {
  EnvConfig cfg;
  const WorldState s = quiet_state(cfg);
  EXPECT_THROW(step(s, JointAction(5, 0), cfg), std::invalid_argument);
  JointAction a = noop(cfg);
  a[2] = 18;
  EXPECT_THROW(step(s, a, cfg), std::out_of_range);
}

TEST(Step, GoalScoresOnceAndEndsEpisode) {
  EnvConfig cfg;
  const WorldState s = parked_state(cfg, {99.5, 30.0}, {2.0, 0.0});
  const StepResult r = step(s, noop(cfg), cfg);
  ASSERT_TRUE(r.events.goal_scored);
  EXPECT_EQ(*r.events.goal_scored, 0);
  EXPECT_TRUE(r.events.episode_done);
  EXPECT_EQ(r.state.score[0], 1);
  EXPECT_EQ(r.state.score[1], 0);
  for (int p = 0; p < 6; ++p) EXPECT_EQ(r.breakdown[p].goal, p < 3 ? cfg.goal_reward : -cfg.goal_reward);
}

TEST(Step, BallOutsideMouthDoesNotScore) {
  EnvConfig cfg;
  const WorldState s = parked_state(cfg, {98.5, 10.0}, {2.0, 0.0});
  const StepResult r = step(s, noop(cfg), cfg);
  EXPECT_FALSE(r.events.goal_scored);
  EXPECT_EQ(r.state.ball.position.x, cfg.pitch_length - cfg.ball_radius);
}

TEST(Step, FinishedGameRejectsFurtherSteps) {
  EnvConfig cfg;
  cfg.steps_per_game = 3;
  WorldState s = quiet_state(cfg);
  for (int t = 0; t < 3; ++t) s = step(s, noop(cfg), cfg).state;
  EXPECT_THROW(step(s, noop(cfg), cfg), std::logic_error);
}

TEST(Rewards, MovingTowardBallEarnsFullExploration) {
  EnvConfig cfg;
  WorldState s = parked_state(cfg, {60.0, 30.0}, {});
  s.players[0].position = {40.0, 30.0};
  JointAction a = noop(cfg);
  a[0] = encode_action({1, 0, false});
  a[1] = encode_action({-1, 0, false});
  const StepResult r = step(s, a, cfg);
  EXPECT_NEAR(r.breakdown[0].explore, cfg.theta_explore, 1e-15);
  EXPECT_EQ(r.breakdown[2].explore, 0.0);
  // player 1 sits at (15, 2), ball far east: moving west is moving away
  EXPECT_LT(r.breakdown[1].explore, 0.0);
}

TEST(Rewards, BallAtRestGivesNoBallReward) {
  EnvConfig cfg;
  const WorldState s = quiet_state(cfg);
  const StepResult r = step(s, noop(cfg), cfg);
  for (const auto& b : r.breakdown) EXPECT_EQ(b.ball, 0.0);
}

TEST(Rewards, BallRewardSharedByTeammatesAndOpposedAcrossTeams) {
  EnvConfig cfg;
  const WorldState s = parked_state(cfg, {50.0, 30.0}, {1.0, 0.0});
  const StepResult r = step(s, noop(cfg), cfg);
  for (int p = 1; p < 3; ++p) EXPECT_EQ(r.breakdown[p].ball, r.breakdown[0].ball);
  EXPECT_GT(r.breakdown[0].ball, 0.0);
  EXPECT_LT(r.breakdown[3].ball, 0.0);
}

TEST(Rewards, DistanceIsEachAgentsMeanToTeammates) {
  EnvConfig cfg;
  WorldState prev = parked_state(cfg, {80.0, 50.0}, {});
  WorldState next = prev;
  // Mutual distances 10 (0-2), 10 (1-2) and 16 (0-1).
  next.players[0].position = {20.0, 20.0};
  next.players[1].position = {36.0, 20.0};
  next.players[2].position = {28.0, 26.0};
  const auto b = reward_components(prev, noop(cfg), next, cfg);
  EXPECT_NEAR(b[0].dist, 13.0 * cfg.theta_dist, 1e-15);
  EXPECT_NEAR(b[1].dist, 13.0 * cfg.theta_dist, 1e-15);
  EXPECT_NEAR(b[2].dist, 10.0 * cfg.theta_dist, 1e-15);
  // The team average equals the mean pairwise distance.
  EXPECT_NEAR((b[0].dist + b[1].dist + b[2].dist) / 3.0, 12.0 * cfg.theta_dist, 1e-15);
}

TEST(Rewards, DistanceCappedAtThreshold) {
  EnvConfig cfg;
  WorldState prev = quiet_state(cfg);
  WorldState next = prev;
  next.players[0].position = {5.0, 5.0};
  next.players[1].position = {95.0, 5.0};
  next.players[2].position = {50.0, 55.0};
  const auto b = reward_components(prev, noop(cfg), next, cfg);
  for (int p = 0; p < 3; ++p) EXPECT_DOUBLE_EQ(b[p].dist, cfg.theta_dist * cfg.theta_max);
}

TEST(Rewards, TotalIsSumOfComponents) {
  EnvConfig cfg;
  Rng rng(5);
  Game g(cfg, SpawnMode::random_spawns, true, 5);
  for (int t = 0; t < 200; ++t) {
    const StepResult r = g.advance(random_joint(cfg, rng));
    for (std::size_t p = 0; p < r.rewards.size(); ++p) {
      const auto& b = r.breakdown[p];
      EXPECT_EQ(r.rewards[p], b.explore + b.ball + b.goal + b.dist);
      EXPECT_GE(b.dist, 0.0);
      EXPECT_LE(b.dist, cfg.theta_dist * cfg.theta_max);
    }
  }
}

TEST(Reset, FixedFormationIsRepeatableAndMirrored) {
  EnvConfig cfg;
  Rng a(1), b(2);
  const WorldState s1 = reset(cfg, SpawnMode::fixed_formation, true, a);
  const WorldState s2 = reset(cfg, SpawnMode::fixed_formation, true, b);
  EXPECT_EQ(s1, s2);
  const WorldState m = mirror_state(s1, cfg);
  for (int p = 0; p < 6; ++p) {
    EXPECT_NEAR(m.players[p].position.x, s1.players[p].position.x, 1e-12);
    EXPECT_NEAR(m.players[p].position.y, s1.players[p].position.y, 1e-12);
  }
  EXPECT_EQ(s1.ball.position, (Vec2{50.0, 30.0}));
}

TEST(Reset, RandomSpawnsAreSeeded) {
  EnvConfig cfg;
  Rng a(9), b(9), c(10);
  const WorldState s1 = reset(cfg, SpawnMode::random_spawns, true, a);
  EXPECT_EQ(s1, reset(cfg, SpawnMode::random_spawns, true, b));
  EXPECT_NE(s1, reset(cfg, SpawnMode::random_spawns, true, c));
}

TEST(Reset, ThousandRandomResetsNeverOverlap) {
  EnvConfig cfg;
  Rng rng(123);
  for (int i = 0; i < 1000; ++i) {
    const WorldState s = reset(cfg, SpawnMode::random_spawns, true, rng);
    ASSERT_FALSE(overlapping(s, cfg)) << "reset " << i;
  }
}

TEST(Reset, InvalidConfigRejected) {
  EnvConfig cfg;
  cfg.goal_width = 70.0;
  Rng rng(0);
  EXPECT_THROW(reset(cfg, SpawnMode::random_spawns, true, rng), ConfigError);
}

TEST(Game, ContainmentOverTenThousandRandomSteps) {
  EnvConfig cfg;
  cfg.steps_per_game = 10000;
  Rng rng(77);
  Game g(cfg, SpawnMode::random_spawns, true, 77);
  int violations = 0;
  int goals = 0;
  std::array<int, 2> prev_score{0, 0};
  for (int t = 0; t < 10000; ++t) {
    const StepResult r = g.advance(random_joint(cfg, rng));
    const auto& s = r.state;
    for (const auto& p : s.players) {
      const auto& q = p.position;
      if (q.x < cfg.player_radius || q.x > cfg.pitch_length - cfg.player_radius || q.y < cfg.player_radius ||
          q.y > cfg.pitch_width - cfg.player_radius)
        ++violations;
      if (p.velocity.norm() > cfg.player_speed + 1e-12) ++violations;
    }
    const auto& b = s.ball.position;
    if (b.x < -cfg.goal_depth + cfg.ball_radius || b.x > cfg.pitch_length + cfg.goal_depth - cfg.ball_radius ||
        b.y < cfg.ball_radius || b.y > cfg.pitch_width - cfg.ball_radius)
      ++violations;
    for (const auto& h : r.events.wall_hits) EXPECT_NEAR(h.outgoing, -cfg.wall_restitution * h.incoming, 1e-9);
    const int delta = (s.score[0] - prev_score[0]) + (s.score[1] - prev_score[1]);
    if (r.events.goal_scored) {
      ++goals;
      EXPECT_EQ(delta, 1);
      EXPECT_TRUE(r.events.episode_done);
    } else {
      EXPECT_EQ(delta, 0);
    }
    prev_score = s.score;
  }
  EXPECT_EQ(violations, 0);
  EXPECT_EQ(g.state().episode, goals);
}

TEST(Game, SameSeedAndActionsGiveIdenticalTrajectories) {
  EnvConfig cfg;
  cfg.steps_per_game = 500;
  Game g1(cfg, SpawnMode::random_spawns, true, 42);
  Game g2(cfg, SpawnMode::random_spawns, true, 42);
  Rng r1(8), r2(8);
  while (!g1.done()) {
    const StepResult a = g1.advance(random_joint(cfg, r1));
    const StepResult b = g2.advance(random_joint(cfg, r2));
    ASSERT_EQ(a.state, b.state);
    ASSERT_EQ(a.rewards, b.rewards);
    ASSERT_EQ(g1.state(), g2.state());
  }
}

TEST(Game, NoGoalsMeansOneEpisodeOfLengthT) {
  EnvConfig cfg;
  cfg.steps_per_game = 60;
  Game g(cfg, SpawnMode::fixed_formation, true, 0);
  int episode_ends = 0;
  int steps = 0;
  while (!g.done()) {
    const StepResult r = g.advance(noop(cfg));
    ++steps;
    if (r.events.episode_done) ++episode_ends;
  }
  EXPECT_EQ(steps, 60);
  EXPECT_EQ(episode_ends, 1);
  EXPECT_EQ(g.state().episode, 0);
  EXPECT_THROW(g.advance(noop(cfg)), std::logic_error);
}

TEST(Game, GoalRespawnsAndKeepsScore) {
  EnvConfig cfg;
  cfg.steps_per_game = 20;
  WorldState s = parked_state(cfg, {99.5, 30.0}, {2.0, 0.0});
  const StepResult r = step(s, noop(cfg), cfg);
  ASSERT_TRUE(r.events.goal_scored);
  WorldState after = r.state;
  Rng rng(0);
  respawn(after, cfg, SpawnMode::fixed_formation, rng);
  EXPECT_EQ(after.episode, 1);
  EXPECT_EQ(after.score, r.state.score);
  EXPECT_EQ(after.step, r.state.step);
  EXPECT_EQ(after.ball.position, (Vec2{50.0, 30.0}));
}
