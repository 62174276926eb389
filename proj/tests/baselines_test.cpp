#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "support.hpp"
#include "taac/evaluation.hpp"
#include "taac/learner.hpp"
#include "taac/policy.hpp"
#include "taac/ppo.hpp"

namespace taac {
namespace {

using testing::random_tensor;
using testing::small_arch;
using testing::uniform_values;

Trajectory random_episode(Rng& rng, std::size_t steps, std::size_t n, std::size_t w) {
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

bool all_zero(std::span<const double> g) {
  return std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; });
}

// Batch whose stored log-probs equal the current policy's, shifted by `log_shift`.
PpoBatch on_policy_batch(const PpoNets& nets, Rng& rng, std::size_t rows, double advantage, double log_shift) {
  PpoBatch b;
  b.obs = random_tensor(rows, 6, rng);
  NoGradGuard no_grad;
  const Tensor lp = log_softmax_rows(nets.logits(b.obs));
  for (std::size_t r = 0; r < rows; ++r) {
    const int a = static_cast<int>(rng.below(18));
    b.actions.push_back(a);
    b.old_log_probs.push_back(lp.at(r, static_cast<std::size_t>(a)) - log_shift);
    b.advantages.push_back(advantage);
    b.returns.push_back(0.0);
  }
  return b;
}

std::vector<std::array<int, 18>> action_counts(std::uint64_t seed, int draws) {
  Rng rng(seed);
  std::vector<std::array<int, 18>> counts(3);
  for (auto& c : counts) c.fill(0);
  for (int d = 0; d < draws; ++d) {
    const auto joint = random_action(3, rng);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NO_THROW(soccer::decode_action(joint[i]));
      ++counts[i][static_cast<std::size_t>(joint[i])];
    }
  }
  return counts;
}

TEST(RandomAction, FrequenciesAreUniform) {
  // The band is about three standard errors per cell, so roughly one seed in
  // six puts one of the 54 cells just outside it; the chi-square test below
  // is the seed-independent check.
  constexpr int kDraws = 18000;
  for (const auto& c : action_counts(2, kDraws))
    for (int n : c) EXPECT_NEAR(static_cast<double>(n) / kDraws, 1.0 / 18.0, 0.005);
}

TEST(RandomAction, ChiSquareAcceptsUniform) {
  constexpr int kDraws = 180000;
  const double expected = kDraws / 18.0;
  for (const auto& c : action_counts(3, kDraws)) {
    double chi2 = 0.0;
    for (int n : c) chi2 += (n - expected) * (n - expected) / expected;
    EXPECT_LT(chi2, 40.79);  // 17 degrees of freedom, p = 0.001
  }
}

TEST(RandomAction, SeedDeterminesSequence) {
  Rng a(5), b(5);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(random_action(3, a), random_action(3, b));
}

TEST(RandomPolicy, ActMatchesRandomActionStream) {
  Rng a(6), b(6);
  const RandomPolicy policy;
  const Tensor obs = Tensor::zeros(3, 22);
  for (int k = 0; k < 50; ++k) {
    const TeamAct act = policy.act(obs, a);
    EXPECT_EQ(act.actions, random_action(3, b));
    for (double lp : act.log_probs) EXPECT_DOUBLE_EQ(lp, -std::log(18.0));
  }
}

TEST(Ppo, ZeroAdvantageAtRatioOneGivesNoPolicyGradient) {
  Rng rng(7);
  PpoNets nets(small_arch(), rng);
  const PpoBatch batch = on_policy_batch(nets, rng, 12, 0.0, 0.0);
  const PpoLoss loss = ppo_loss(nets, batch, PpoOptions{});
  for (double r : loss.ratio.data()) EXPECT_NEAR(r, 1.0, 1e-12);
  backward(loss.policy);
  for (const auto& [name, p] : nets.parameters()) EXPECT_TRUE(all_zero(p.grad())) << name;
}

TEST(Ppo, ClippedBranchHasNoGradient) {
  Rng rng(8);
  PpoNets nets(small_arch(), rng);
  // Ratio 1.3 is past 1 + 0.2: with a positive advantage the clipped value wins.
  const PpoBatch pos = on_policy_batch(nets, rng, 10, 1.0, std::log(1.3));
  const PpoLoss lp = ppo_loss(nets, pos, PpoOptions{});
  for (double r : lp.ratio.data()) EXPECT_NEAR(r, 1.3, 1e-12);
  EXPECT_NEAR(lp.policy.item(), -1.2, 1e-12);
  backward(lp.policy);
  for (const auto& [name, p] : nets.parameters()) EXPECT_TRUE(all_zero(p.grad())) << name;

  // With a negative advantage the unclipped branch is the minimum.
  PpoNets fresh(small_arch(), rng);
  const PpoBatch neg = on_policy_batch(fresh, rng, 10, -1.0, std::log(1.3));
  const PpoLoss ln = ppo_loss(fresh, neg, PpoOptions{});
  EXPECT_NEAR(ln.policy.item(), 1.3, 1e-12);
  backward(ln.policy);
  bool any = false;
  for (const auto& [name, p] : fresh.parameters())
    if (name.starts_with("ppo/policy")) any = any || !all_zero(p.grad());
  EXPECT_TRUE(any);
}

TEST(Ppo, GaeMatchesDirectSum) {
  Rng rng(9);
  PpoNets nets(small_arch(), rng);
  PpoOptions opt;
  opt.gamma = 0.97;
  opt.gae_lambda = 0.9;
  const std::vector<Trajectory> eps{random_episode(rng, 9, 3, 6), random_episode(rng, 4, 3, 6)};
  const PpoBatch b = make_ppo_batch(eps, nets, opt);
  std::size_t offset = 0;
  for (const auto& ep : eps) {
    const std::size_t T = ep.length(), n = ep.team_size;
    auto value = [&](std::size_t t, std::size_t i) {
      NoGradGuard no_grad;
      const auto& o = ep.transitions[t].observations;
      return nets.values(Tensor::from(1, 6, {o.begin() + i * 6, o.begin() + (i + 1) * 6})).item();
    };
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        double a = 0.0, w = 1.0;
        for (std::size_t k = t; k < T; ++k) {
          const double next = k + 1 < T ? value(k + 1, i) : 0.0;
          a += w * (ep.transitions[k].rewards[i] + opt.gamma * next - value(k, i));
          w *= opt.gamma * opt.gae_lambda;
        }
        const std::size_t row = offset + t * n + i;
        EXPECT_NEAR(b.advantages[row], a, 1e-12);
        EXPECT_NEAR(b.returns[row], a + value(t, i), 1e-12);
        EXPECT_EQ(b.actions[row], ep.transitions[t].actions[i]);
      }
    }
    offset += T * n;
  }
  EXPECT_EQ(b.obs.rows(), offset);
}

TEST(Ppo, UpdateChangesPolicyAndRejectsIncompleteEpisodes) {
  Rng rng(10);
  PpoLearner learner(small_arch(), PpoOptions{}, 10);
  const auto before = learner.snapshot(0);
  learner.update({random_episode(rng, 6, 3, 6)});
  EXPECT_NE(learner.snapshot(0).weights, before.weights);
  Trajectory cut = random_episode(rng, 3, 3, 6);
  cut.transitions.back().episode_done = false;
  EXPECT_THROW(learner.update({cut}), std::invalid_argument);
}

// Row i must not move when another agent's observation changes.
void expect_isolated(const TeamPolicy& policy, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  const Tensor obs = random_tensor(3, w, rng);
  const auto base = policy.distributions(obs);
  for (std::size_t j = 0; j < 3; ++j) {
    std::vector<double> changed(obs.data().begin(), obs.data().end());
    for (std::size_t c = 0; c < w; ++c) changed[j * w + c] += rng.uniform(-2, 2);
    const auto moved = policy.distributions(Tensor::from(3, w, changed));
    for (std::size_t i = 0; i < 3; ++i) {
      if (i == j) continue;
      for (std::size_t a = 0; a < 18; ++a) EXPECT_EQ(moved[i * 18 + a], base[i * 18 + a]);
    }
  }
}

TEST(Isolation, PpoAgentsSeeOnlyTheirOwnObservation) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto policy = policy_from_snapshot(initial_snapshot(PolicyKind::ppo, small_arch(), {}, s));
    expect_isolated(*policy, 6, s + 100);
  }
}

TEST(Isolation, ActorWithoutAttentionIsPerAgent) {
  AblationConfig ab;
  ab.actor_attention_off = true;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto policy = policy_from_snapshot(initial_snapshot(PolicyKind::taac_ablation, small_arch(), ab, s));
    EXPECT_EQ(policy->kind(), PolicyKind::taac_ablation);
    expect_isolated(*policy, 6, s + 200);
  }
}

TEST(Isolation, FullActorCouplesAgents) {
  const auto policy = policy_from_snapshot(initial_snapshot(PolicyKind::taac, small_arch(), {}, 3));
  Rng rng(4);
  const Tensor obs = random_tensor(3, 6, rng);
  std::vector<double> changed(obs.data().begin(), obs.data().end());
  for (std::size_t c = 6; c < 12; ++c) changed[c] += 1.0;
  const auto a = policy->distributions(obs);
  const auto b = policy->distributions(Tensor::from(3, 6, changed));
  EXPECT_NE(std::vector<double>(a.begin(), a.begin() + 18), std::vector<double>(b.begin(), b.begin() + 18));
}

std::set<std::string> names(const WeightSet& w) {
  std::set<std::string> out;
  for (const auto& e : w) out.insert(e.name);
  return out;
}

TEST(AblationDiff, NoActorAttentionDropsExactlyTheActorAttention) {
  AblationConfig ab;
  ab.actor_attention_off = true;
  const auto full = names(initial_snapshot(PolicyKind::taac, small_arch(), {}, 1).weights);
  const auto cut = names(initial_snapshot(PolicyKind::taac_ablation, small_arch(), ab, 1).weights);
  std::set<std::string> dropped;
  std::set_difference(full.begin(), full.end(), cut.begin(), cut.end(), std::inserter(dropped, dropped.end()));
  EXPECT_FALSE(dropped.empty());
  for (const auto& n : dropped) EXPECT_TRUE(n.starts_with("actor/attention/")) << n;
  for (const auto& n : full) {
    if (n.starts_with("actor/attention/")) {
      EXPECT_TRUE(dropped.contains(n)) << n;
    }
  }
  EXPECT_TRUE(std::includes(full.begin(), full.end(), cut.begin(), cut.end()));
}

std::set<std::string> unchanged(const WeightSet& before, const WeightSet& after) {
  std::set<std::string> out;
  for (const auto& b : before)
    for (const auto& a : after)
      if (a.name == b.name && a.data == b.data) out.insert(a.name);
  return out;
}

TEST(AblationDiff, FixedValueFreezesExactlyTheCriticValueMatrices) {
  auto run = [](const AblationConfig& ab) {
    TaacLearner learner(small_arch(), ab, LearnerOptions{}, 21);
    const WeightSet before = learner.snapshot(0).weights;
    Rng rng(21);
    for (int k = 0; k < 3; ++k) learner.update({random_episode(rng, 5, 3, 6)});
    return unchanged(before, learner.snapshot(0).weights);
  };
  AblationConfig fixed;
  fixed.critic_v_fixed = true;
  const auto base = run({});
  const auto frozen = run(fixed);
  std::set<std::string> extra;
  std::set_difference(frozen.begin(), frozen.end(), base.begin(), base.end(), std::inserter(extra, extra.end()));
  EXPECT_FALSE(extra.empty());
  for (const auto& n : extra) {
    EXPECT_TRUE(n.starts_with("critic/attention/")) << n;
    EXPECT_TRUE(n.ends_with("/value")) << n;
  }
  for (const auto& n : base) EXPECT_TRUE(frozen.contains(n)) << n;
}

TEST(Interface, EveryKindPlaysAMatch) {
  soccer::EnvConfig env;
  env.steps_per_game = 60;
  ArchConfig arch;
  arch.d_model = 8;
  arch.actor_heads = 2;
  arch.critic_heads = 2;
  AblationConfig ab;
  ab.actor_attention_off = true;
  std::vector<std::unique_ptr<TeamPolicy>> policies;
  Rng init(30);
  for (PolicyKind k : {PolicyKind::taac, PolicyKind::taac_ablation, PolicyKind::ppo, PolicyKind::random})
    policies.push_back(build_policy(k, arch, ab, init));
  for (const auto& a : policies) {
    for (const auto& b : policies) {
      const MatchRecord rec = play_match(*a, *b, env, 31);
      int total = 0;
      for (int l : rec.episode_lengths) total += l;
      EXPECT_EQ(total, env.steps_per_game);
      Rng spawn(32);
      const auto start = soccer::reset(env, soccer::SpawnMode::fixed_formation, true, spawn);
      const TeamAct act = a->act(team_observations(start, 0, env), init);
      ASSERT_EQ(act.actions.size(), 3u);
      for (int x : act.actions) EXPECT_NO_THROW(soccer::decode_action(x));
    }
  }
}

}  // namespace
}  // namespace taac
