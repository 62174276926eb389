#include "taac/gradient_suite.hpp"

#include <algorithm>

#include "taac/gradcheck.hpp"
#include "taac/learner.hpp"
#include "taac/ppo.hpp"

namespace taac {

double GradientSuiteReport::max_relative_error() const {
  double m = 0.0;
  for (const auto& c : cases) m = std::max(m, c.max_relative_error);
  return m;
}

namespace {

constexpr std::size_t kTeam = 3;
constexpr std::size_t kSteps = 2;
constexpr int kObs = 6;

ArchConfig small_arch() {
  ArchConfig a;
  a.obs_dim = kObs;
  a.d_model = 8;
  a.actor_heads = 2;
  a.critic_heads = 2;
  a.embed_hidden = {8};
  a.post_hidden = {8};
  a.ppo_hidden = {8};
  a.activation = Activation::tanh;
  a.logit_init_gain = 1.0;
  a.input_scale = 1.0;
  return a;
}

TeamBatch random_batch(Rng& rng) {
  TeamBatch b;
  b.team_size = kTeam;
  const std::size_t rows = kTeam * kSteps;
  std::vector<double> obs(rows * kObs), next(rows * kObs);
  for (double& x : obs) x = rng.uniform(-1.0, 1.0);
  for (double& x : next) x = rng.uniform(-1.0, 1.0);
  b.obs = Tensor::from(rows, kObs, obs);
  b.next_obs = Tensor::from(rows, kObs, next);
  for (std::size_t r = 0; r < rows; ++r) {
    b.actions.push_back(static_cast<int>(rng.below(soccer::kActionCount)));
    b.next_actions.push_back(static_cast<int>(rng.below(soccer::kActionCount)));
    b.log_probs.push_back(-std::log(18.0));
    b.rewards.push_back(rng.uniform(-1.0, 1.0));
    b.returns.push_back(rng.uniform(-2.0, 2.0));
  }
  b.done.assign(kSteps, 0);
  b.done.back() = 1;
  return b;
}

std::vector<double> random_vector(std::size_t n, double lo, double hi, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

GradientCase record(const char* name, std::uint64_t seed, const GradCheckResult& r) {
  return {name, seed, r.max_relative_error, r.coordinates};
}

}  // namespace

GradientSuiteReport run_gradient_suite(int seeds, double eps) {
  GradientSuiteReport report;
  for (int s = 0; s < seeds; ++s) {
    const auto seed = static_cast<std::uint64_t>(s);
    Rng rng(derive_seed(seed, 42));
    LearnerOptions opts;
    // Keep the floor inactive so the conformity term stays differentiable.
    opts.theta_b = -1.0;
    opts.theta_s = 0.5;
    opts.entropy_coef = 0.1;
    TaacLearner learner(small_arch(), AblationConfig{}, opts, derive_seed(seed, 1));
    const TeamBatch batch = random_batch(rng);
    const auto adv = random_vector(batch.actions.size(), -1.0, 1.0, rng);
    const auto actor_params = tensors_of(learner.actor().parameters());
    const auto critic_params = tensors_of(learner.critic().parameters());

    report.cases.push_back(record("actor_log_prob", seed, grad_check([&] {
      const auto o = learner.actor_objective(batch, adv);
      return sub(o.policy, scale(o.entropy, opts.entropy_coef));
    }, actor_params, eps)));

    report.cases.push_back(
        record("critic_mse", seed, grad_check([&] { return learner.critic_objective(batch); }, critic_params, eps)));

    report.cases.push_back(record("conformity", seed, grad_check([&] {
      const auto out = learner.actor().forward(batch.obs, kTeam);
      return conformity_loss(out.embeddings, kTeam, opts.theta_s, opts.theta_b);
    }, actor_params, eps)));

    report.cases.push_back(record("actor_total", seed, grad_check([&] {
      return learner.actor_objective(batch, adv).total;
    }, actor_params, eps)));

    Rng init(derive_seed(seed, 2));
    PpoNets nets(small_arch(), init);
    PpoBatch pb;
    pb.obs = batch.obs;
    pb.actions = batch.actions;
    pb.advantages = adv;
    pb.returns = batch.returns;
    {
      NoGradGuard no_grad;
      const Tensor logp = gather_cols(log_softmax_rows(nets.logits(pb.obs)), pb.actions);
      // Behaviour log-probs a little off so both clip branches appear.
      for (double lp : logp.data()) pb.old_log_probs.push_back(lp + rng.uniform(-0.4, 0.4));
    }
    const PpoOptions ppo_opts;
    report.cases.push_back(record("ppo_surrogate", seed, grad_check([&] {
      return ppo_loss(nets, pb, ppo_opts).total;
    }, tensors_of(nets.parameters()), eps)));
  }
  return report;
}

}  // namespace taac
