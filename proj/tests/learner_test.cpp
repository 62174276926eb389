#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "support.hpp"
#include "taac/curriculum.hpp"
#include "taac/errors.hpp"
#include "taac/learner.hpp"
#include "taac/serialization.hpp"
#include "taac/trainer.hpp"

using namespace taac;
using taac::testing::small_arch;
using taac::testing::uniform_values;

namespace fs = std::filesystem;

namespace {

Trajectory synthetic_episode(Rng& rng, std::size_t steps, std::size_t n = 3, std::size_t w = 6) {
  Trajectory traj;
  traj.team_size = n;
  traj.obs_dim = w;
  for (std::size_t t = 0; t < steps; ++t) {
    Transition tr;
    tr.observations = uniform_values(n * w, rng);
    tr.next_observations = uniform_values(n * w, rng);
    for (std::size_t i = 0; i < n; ++i) {
      tr.actions.push_back(static_cast<int>(rng.below(18)));
      tr.log_probs.push_back(std::log(1.0 / 18.0));
      tr.rewards.push_back(rng.uniform(-1, 1));
    }
    tr.episode_done = t + 1 == steps;
    tr.step = static_cast<int>(t);
    traj.transitions.push_back(std::move(tr));
  }
  return traj;
}

Trajectory reward_sequence(const std::vector<double>& rewards) {
  Trajectory traj;
  traj.team_size = 1;
  traj.obs_dim = 1;
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    Transition tr;
    tr.observations = {0.0};
    tr.next_observations = {0.0};
    tr.actions = {0};
    tr.log_probs = {0.0};
    tr.rewards = {rewards[t]};
    tr.episode_done = t + 1 == rewards.size();
    traj.transitions.push_back(tr);
  }
  return traj;
}

LearnerOptions quiet_options() {
  LearnerOptions o;
  o.conformity = false;
  o.entropy_coef = 0.0;
  return o;
}

bool same_values(const WeightSet& a, const WeightSet& b, const std::string& prefix) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].name.rfind(prefix, 0) != 0) continue;
    if (a[k].data != b[k].data) return false;
  }
  return true;
}

RunConfig tiny_run(const fs::path& dir, PolicyKind kind = PolicyKind::taac) {
  RunConfig cfg;
  cfg.kind = kind;
  cfg.seed = 17;
  cfg.output_dir = dir.string();
  cfg.env.steps_per_game = 25;
  cfg.arch.d_model = 8;
  cfg.arch.actor_heads = 2;
  cfg.arch.critic_heads = 2;
  cfg.arch.embed_hidden = {8};
  cfg.arch.post_hidden = {8};
  cfg.arch.ppo_hidden = {8};
  cfg.curriculum.stage_games = {2, 2, 2, 2};
  cfg.curriculum.games_per_update = 1;
  cfg.curriculum.snapshot_interval = 3;
  return cfg;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("taac_learner_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Returns, HandCase) {
  const auto g = compute_returns(reward_sequence({1, 2, 3}), 0.5);
  EXPECT_DOUBLE_EQ(g[0][0], 2.75);
  EXPECT_DOUBLE_EQ(g[1][0], 3.5);
  EXPECT_DOUBLE_EQ(g[2][0], 3.0);
}

TEST(Returns, ZeroRewardsGiveZeroReturns) {
  for (const auto& row : compute_returns(reward_sequence({0, 0, 0, 0}), 0.9)) EXPECT_EQ(row[0], 0.0);
}

TEST(Returns, MyopicDiscountReturnsRewards) {
  Rng rng(1);
  const Trajectory traj = synthetic_episode(rng, 7);
  const auto g = compute_returns(traj, 0.0);
  for (std::size_t t = 0; t < 7; ++t)
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(g[t][i], traj.transitions[t].rewards[i]);
}

TEST(Returns, MatchesDoubleLoopAndRecursion) {
  Rng rng(2);
  for (int k = 0; k < 1000; ++k) {
    const std::size_t T = 1 + rng.below(40);
    const std::size_t n = 1 + rng.below(3);
    const double gamma = rng.uniform();
    const Trajectory traj = synthetic_episode(rng, T, n, 1);
    const auto g = compute_returns(traj, gamma);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < T; ++t) {
        double direct = 0.0;
        for (std::size_t s = t; s < T; ++s) direct += std::pow(gamma, static_cast<double>(s - t)) * traj.transitions[s].rewards[i];
        ASSERT_NEAR(g[t][i], direct, 1e-12);
        if (t + 1 < T) {
          ASSERT_EQ(g[t][i], traj.transitions[t].rewards[i] + gamma * g[t + 1][i]);
        }
      }
      ASSERT_EQ(g[T - 1][i], traj.transitions[T - 1].rewards[i]);
    }
  }
}

TEST(Returns, RejectsBadInput) {
  const Trajectory traj = reward_sequence({1, 2});
  EXPECT_THROW(compute_returns(traj, -0.1), std::invalid_argument);
  EXPECT_THROW(compute_returns(traj, 1.5), std::invalid_argument);
  Trajectory open = traj;
  open.transitions.back().episode_done = false;
  EXPECT_THROW(compute_returns(open, 0.9), std::invalid_argument);
  EXPECT_THROW(compute_returns(Trajectory{}, 0.9), std::invalid_argument);
}

TEST(Batch, NextActionsComeFromFollowingStep) {
  Rng rng(3);
  std::vector<Trajectory> eps{synthetic_episode(rng, 3), synthetic_episode(rng, 2)};
  attach_returns(eps, 0.9);
  const TeamBatch b = make_batch(eps);
  EXPECT_EQ(b.steps(), 5u);
  EXPECT_EQ(b.obs.rows(), 15u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(b.next_actions[i], eps[0].transitions[1].actions[i]);
    EXPECT_EQ(b.next_actions[6 + i], eps[0].transitions[2].actions[i]);
  }
  EXPECT_EQ(b.done, (std::vector<char>{0, 0, 1, 0, 1}));
  EXPECT_EQ(b.returns.size(), 15u);
}

TEST(Actor, ZeroAdvantageMeansZeroPolicyGradient) {
  Rng rng(4);
  TaacLearner learner(small_arch(), {}, LearnerOptions{}, 4);
  std::vector<Trajectory> eps{synthetic_episode(rng, 4)};
  attach_returns(eps, 0.99);
  const TeamBatch b = make_batch(eps);
  const auto obj = learner.actor_objective(b, std::vector<double>(12, 0.0));
  EXPECT_EQ(obj.policy.item(), 0.0);
  backward(obj.policy);
  for (const auto& p : learner.actor_optimizer().params())
    for (double g : p.grad()) EXPECT_EQ(g, 0.0);
  // Conformity and entropy terms still move the parameters.
  const auto before = capture_weights(learner.actor().parameters());
  learner.actor_update(b, std::vector<double>(12, 0.0));
  EXPECT_NE(capture_weights(learner.actor().parameters()), before);
}

TEST(Actor, PositiveAdvantageRaisesTakenActionProbability) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    LearnerOptions o = quiet_options();
    o.actor_lr = 1e-3;
    TaacLearner learner(small_arch(), {}, o, seed);
    std::vector<Trajectory> eps{synthetic_episode(rng, 1)};
    attach_returns(eps, 0.99);
    const TeamBatch b = make_batch(eps);
    const Tensor before = learner.actor().forward(b.obs, 3).probs;
    learner.actor_update(b, {1.0, 1.0, 1.0});
    const Tensor after = learner.actor().forward(b.obs, 3).probs;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto a = static_cast<std::size_t>(b.actions[i]);
      EXPECT_GT(after.at(i, a), before.at(i, a)) << "seed " << seed << " agent " << i;
    }
  }
}

TEST(Critic, MatchingTargetsGiveZeroLossAndGradient) {
  Rng rng(5);
  TaacLearner learner(small_arch(), {}, quiet_options(), 5);
  std::vector<Trajectory> eps{synthetic_episode(rng, 3)};
  attach_returns(eps, 0.9);
  TeamBatch b = make_batch(eps);
  const Tensor q = learner.critic().forward(b.obs, b.actions, 3).q;
  b.returns.assign(q.data().begin(), q.data().end());
  const Tensor loss = learner.critic_objective(b);
  EXPECT_EQ(loss.item(), 0.0);
  backward(loss);
  for (const auto& p : learner.critic_optimizer().params())
    for (double g : p.grad()) EXPECT_EQ(g, 0.0);
}

TEST(Critic, ConvergesToConstantTarget) {
  Rng rng(6);
  LearnerOptions o = quiet_options();
  o.critic_lr = 1e-2;
  TaacLearner learner(small_arch(), {}, o, 6);
  std::vector<Trajectory> eps{synthetic_episode(rng, 4)};
  attach_returns(eps, 0.9);
  TeamBatch b = make_batch(eps);
  b.returns.assign(b.returns.size(), 0.7);
  for (int k = 0; k < 2000; ++k) learner.critic_update(b);
  const Tensor q = learner.critic().forward(b.obs, b.actions, 3).q;
  for (double x : q.data()) EXPECT_NEAR(x, 0.7, 1e-3);
}

TEST(Critic, TdTargetBootstrapsFromNextStep) {
  Rng rng(7);
  LearnerOptions o = quiet_options();
  o.critic_target = CriticTarget::td;
  o.gamma = 0.5;
  TaacLearner learner(small_arch(), {}, o, 7);
  std::vector<Trajectory> eps{synthetic_episode(rng, 2)};
  attach_returns(eps, 0.5);
  const TeamBatch b = make_batch(eps);
  const Tensor next_q = learner.critic().forward(b.next_obs, b.next_actions, 3).q;
  const Tensor q = learner.critic().forward(b.obs, b.actions, 3).q;
  double expected = 0.0;
  for (std::size_t r = 0; r < 6; ++r) {
    const double y = b.rewards[r] + (r < 3 ? 0.5 * next_q.data()[r] : 0.0);
    expected += (q.data()[r] - y) * (q.data()[r] - y);
  }
  EXPECT_NEAR(learner.critic_objective(b).item(), expected / 6.0, 1e-12);
}

TEST(Updates, NoCrossGradients) {
  Rng rng(8);
  TaacLearner learner(small_arch(), {}, LearnerOptions{}, 8);
  std::vector<Trajectory> eps{synthetic_episode(rng, 5)};
  attach_returns(eps, 0.99);
  const TeamBatch b = make_batch(eps);
  const auto w0 = learner.snapshot(0).weights;
  learner.actor_update(b);
  const auto w1 = learner.snapshot(0).weights;
  EXPECT_TRUE(same_values(w0, w1, "critic/"));
  EXPECT_FALSE(same_values(w0, w1, "actor/"));
  learner.critic_update(b);
  const auto w2 = learner.snapshot(0).weights;
  EXPECT_TRUE(same_values(w1, w2, "actor/"));
  EXPECT_FALSE(same_values(w1, w2, "critic/"));
}

TEST(Updates, AdvantageIsReturnMinusCounterfactualBaseline) {
  Rng rng(9);
  TaacLearner learner(small_arch(), {}, LearnerOptions{}, 9);
  std::vector<Trajectory> eps{synthetic_episode(rng, 3)};
  attach_returns(eps, 0.99);
  const TeamBatch b = make_batch(eps);
  const auto adv = learner.advantages(b);
  const auto cv = counterfactual_values(learner.actor(), learner.critic(), b.obs, b.actions, 3);
  for (std::size_t r = 0; r < adv.size(); ++r) EXPECT_EQ(adv[r], b.returns[r] - cv.baseline[r]);

  LearnerOptions coma;
  coma.advantage = AdvantageMode::coma;
  TaacLearner q_learner(small_arch(), {}, coma, 9);
  const auto qa = q_learner.advantages(b);
  for (std::size_t r = 0; r < qa.size(); ++r) EXPECT_EQ(qa[r], cv.q_taken[r] - cv.baseline[r]);
}

TEST(Updates, DeterministicForFixedSeed) {
  auto run = [] {
    Rng rng(10);
    TaacLearner learner(small_arch(), {}, LearnerOptions{}, 10);
    std::vector<double> losses;
    for (int k = 0; k < 3; ++k) {
      const auto rep = learner.update({synthetic_episode(rng, 4), synthetic_episode(rng, 2)});
      losses.push_back(rep.policy_loss);
      losses.push_back(rep.critic_loss);
    }
    return std::make_pair(losses, learner.snapshot(3));
  };
  EXPECT_EQ(run(), run());
}

TEST(Updates, NonFiniteRewardAbortsAndDumpsBatch) {
  Rng rng(11);
  const fs::path dump = fresh_dir("nan") / "nan_batch.json";
  fs::create_directories(dump.parent_path());
  LearnerOptions o;
  o.nan_dump_path = dump.string();
  TaacLearner learner(small_arch(), {}, o, 11);
  Trajectory traj = synthetic_episode(rng, 3);
  traj.transitions[1].rewards[0] = std::nan("");
  const auto before = learner.snapshot(0);
  EXPECT_THROW(learner.update({traj}), NumericError);
  EXPECT_TRUE(fs::exists(dump));
  EXPECT_EQ(learner.snapshot(0), before);
}

TEST(Ablation, FixedValueMatricesNeverMove) {
  Rng rng(12);
  AblationConfig ab;
  ab.critic_v_fixed = true;
  TaacLearner learner(small_arch(), ab, LearnerOptions{}, 12);
  const auto v0 = capture_weights(learner.critic().value_matrices());
  for (int k = 0; k < 3; ++k) learner.update({synthetic_episode(rng, 4)});
  EXPECT_EQ(capture_weights(learner.critic().value_matrices()), v0);
  EXPECT_EQ(learner.kind(), PolicyKind::taac_ablation);
}

TEST(Ablation, NoActorAttentionDecouplesAgents) {
  AblationConfig ab;
  ab.actor_attention_off = true;
  TaacLearner learner(small_arch(), ab, LearnerOptions{}, 13);
  Rng rng(13);
  Tensor obs = taac::testing::random_tensor(3, 6, rng);
  std::vector<double> changed(obs.data().begin(), obs.data().end());
  changed[7] += 1.0;
  const Tensor p1 = learner.actor().forward(obs, 3).probs;
  const Tensor p2 = learner.actor().forward(Tensor::from(3, 6, changed), 3).probs;
  for (std::size_t c = 0; c < 18; ++c) EXPECT_EQ(p1.at(0, c), p2.at(0, c));
}

TEST(StateIo, SaveLoadRestoresEverything) {
  Rng rng(14);
  TaacLearner a(small_arch(), {}, LearnerOptions{}, 14);
  a.update({synthetic_episode(rng, 3)});
  TaacLearner b(small_arch(), {}, LearnerOptions{}, 99);
  b.load_state(a.save_state());
  EXPECT_EQ(b.snapshot(1), a.snapshot(1));
  const Trajectory next = synthetic_episode(rng, 3);
  const auto ra = a.update({next});
  const auto rb = b.update({next});
  EXPECT_EQ(ra.policy_loss, rb.policy_loss);
  EXPECT_EQ(a.snapshot(2), b.snapshot(2));
}

TEST(League, SingleSnapshotAlwaysDrawn) {
  SnapshotLeague league;
  PolicySnapshot s;
  s.version = 3;
  league.add(s);
  Rng rng(1);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(league.sample(rng)->version, 3);
}

TEST(League, TwoSnapshotsDrawnUniformly) {
  SnapshotLeague league;
  PolicySnapshot s;
  s.version = 0;
  league.add(s);
  s.version = 1;
  league.add(s);
  Rng rng(2);
  int ones = 0;
  for (int k = 0; k < 10000; ++k) ones += static_cast<int>(league.sample(rng)->version);
  EXPECT_NEAR(ones / 10000.0, 0.5, 0.02);
}

TEST(League, EmptyLeagueRejected) {
  SnapshotLeague league;
  Rng rng(0);
  EXPECT_THROW(league.sample(rng), std::logic_error);
}

TEST(League, DrawsNeverAliasLiveParameters) {
  Rng rng(15);
  TaacLearner learner(small_arch(), {}, LearnerOptions{}, 15);
  SnapshotLeague league;
  PolicySnapshot snap = learner.snapshot(0);
  league.add(snap);
  const PolicySnapshot copy = snap;
  snap.weights.front().data[0] += 1.0;
  learner.update({synthetic_episode(rng, 3)});
  Rng draw(0);
  EXPECT_EQ(*league.sample(draw), copy);
}

TEST(Curriculum, StagesInOrder) {
  const auto stages = stage_specs(CurriculumConfig{});
  ASSERT_EQ(stages.size(), 4u);
  EXPECT_EQ(stages[0].opponent, OpponentSource::inactive);
  EXPECT_EQ(stages[1].opponent, OpponentSource::random);
  EXPECT_EQ(stages[2].opponent, OpponentSource::league);
  EXPECT_EQ(stages[3].opponent, OpponentSource::league);
  EXPECT_EQ(stages[2].spawn, soccer::SpawnMode::random_spawns);
  EXPECT_EQ(stages[3].spawn, soccer::SpawnMode::fixed_formation);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(stages[k].tag, k + 1);
}

TEST(Curriculum, RolloutEpisodesCoverTheGame) {
  soccer::EnvConfig env;
  env.steps_per_game = 150;
  const RandomPolicy a;
  const RandomPolicy b;
  for (int side = 0; side < 2; ++side) {
    const GameRollout r = collect_game(a, b, env, soccer::SpawnMode::random_spawns, true, side, 5);
    std::size_t steps = 0;
    for (const auto& e : r.episodes) {
      steps += e.length();
      EXPECT_TRUE(e.transitions.back().episode_done);
      EXPECT_EQ(e.team_size, 3u);
    }
    EXPECT_EQ(steps, 150u);
    const std::size_t goals = static_cast<std::size_t>(r.goals_for + r.goals_against);
    EXPECT_TRUE(r.episodes.size() == goals + 1 || r.episodes.size() == goals);
  }
  const InactivePolicy idle;
  EXPECT_THROW(collect_game(a, idle, env, soccer::SpawnMode::random_spawns, false, 1, 5), std::invalid_argument);
}

TEST(Trainer, ZeroGamesLeavesInitialization) {
  const fs::path dir = fresh_dir("zero");
  RunConfig cfg = tiny_run(dir);
  cfg.curriculum.stage_games = {0, 0, 0, 0};
  const TrainResult res = run_curriculum(cfg);
  const PolicySnapshot init = initial_snapshot(PolicyKind::taac, cfg.arch, {}, init_seed(cfg));
  EXPECT_EQ(res.final_snapshot.weights, init.weights);
  EXPECT_EQ(res.updates, 0);
  EXPECT_EQ(read_text_file(dir / "train_log.jsonl"), "");
}

TEST(Trainer, SameSeedSameLog) {
  const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
  run_curriculum(tiny_run(a));
  run_curriculum(tiny_run(b));
  const std::string la = read_text_file(a / "train_log.jsonl");
  EXPECT_FALSE(la.empty());
  EXPECT_EQ(la, read_text_file(b / "train_log.jsonl"));
  EXPECT_EQ(read_text_file(a / "final_snapshot.json"), read_text_file(b / "final_snapshot.json"));
}

TEST(Trainer, ThreadCountDoesNotChangeResults) {
  const fs::path a = fresh_dir("thr_a"), b = fresh_dir("thr_b");
  RunConfig ca = tiny_run(a);
  ca.curriculum.games_per_update = 2;
  RunConfig cb = tiny_run(b);
  cb.curriculum.games_per_update = 2;
  cb.threads = 3;
  run_curriculum(ca);
  run_curriculum(cb);
  EXPECT_EQ(read_text_file(a / "train_log.jsonl"), read_text_file(b / "train_log.jsonl"));
}

TEST(Trainer, ResumeAfterInterruptionMatchesUninterruptedRun) {
  for (PolicyKind kind : {PolicyKind::taac, PolicyKind::ppo}) {
    const fs::path a = fresh_dir("resume_a"), b = fresh_dir("resume_b");
    RunConfig ca = tiny_run(a, kind);
    RunConfig cb = tiny_run(b, kind);
    if (kind == PolicyKind::ppo) {
      ca.ppo.minibatches = cb.ppo.minibatches = 2;
    }
    const TrainResult full = run_curriculum(ca);
    int seen = 0;
    EXPECT_THROW(run_curriculum(cb, [&](const std::string&) {
                   if (++seen == 5) throw std::runtime_error("interrupted");
                 }),
                 std::runtime_error);
    const TrainResult resumed = run_curriculum(cb);
    EXPECT_TRUE(resumed.resumed);
    EXPECT_EQ(resumed.final_snapshot, full.final_snapshot);
    EXPECT_EQ(read_text_file(a / "train_log.jsonl"), read_text_file(b / "train_log.jsonl"));
    EXPECT_EQ(resumed.games, 8);
  }
}

TEST(Trainer, ResumeRejectsChangedConfig) {
  const fs::path dir = fresh_dir("changed");
  run_curriculum(tiny_run(dir));
  RunConfig other = tiny_run(dir);
  other.learner.actor_lr = 1e-2;
  EXPECT_THROW(run_curriculum(other), ConfigError);
}

TEST(Trainer, SnapshotsWrittenAtInterval) {
  const fs::path dir = fresh_dir("snaps");
  run_curriculum(tiny_run(dir));
  EXPECT_TRUE(fs::exists(dir / "snapshots" / "000000.json"));
  EXPECT_TRUE(fs::exists(dir / "snapshots" / "000003.json"));
  EXPECT_TRUE(fs::exists(dir / "snapshots" / "000006.json"));
  EXPECT_TRUE(fs::exists(dir / "checkpoint.json"));
  EXPECT_TRUE(fs::exists(dir / "config.json"));
  EXPECT_EQ(load_snapshot(dir / "final_snapshot.json").kind, PolicyKind::taac);
}
