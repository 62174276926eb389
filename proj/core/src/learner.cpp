#include "taac/learner.hpp"

#include <cmath>
#include <stdexcept>

#include "json_io.hpp"

namespace taac {

using jsonio::json;

// ---- returns --------------------------------------------------------------

std::vector<std::vector<double>> compute_returns(const Trajectory& traj, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("compute_returns: gamma " + std::to_string(gamma) + " outside [0, 1]");
  }
  if (traj.transitions.empty()) throw std::invalid_argument("compute_returns: empty trajectory");
  if (!traj.transitions.back().episode_done) throw std::invalid_argument("compute_returns: incomplete episode");
  const std::size_t T = traj.transitions.size();
  const std::size_t n = traj.team_size;
  std::vector<std::vector<double>> g(T, std::vector<double>(n, 0.0));
  for (std::size_t t = T; t-- > 0;) {
    const auto& r = traj.transitions[t].rewards;
    if (r.size() != n) throw std::invalid_argument("compute_returns: reward vector length != team size");
    for (std::size_t i = 0; i < n; ++i) g[t][i] = r[i] + (t + 1 < T ? gamma * g[t + 1][i] : 0.0);
  }
  return g;
}

void attach_returns(std::vector<Trajectory>& batch, double gamma) {
  for (auto& t : batch) t.returns = compute_returns(t, gamma);
}

TeamBatch make_batch(const std::vector<Trajectory>& batch) {
  if (batch.empty()) throw std::invalid_argument("make_batch: empty batch");
  TeamBatch b;
  b.team_size = batch.front().team_size;
  const std::size_t w = batch.front().obs_dim;
  const bool with_returns = !batch.front().returns.empty();
  std::vector<double> obs, next_obs;
  for (const auto& traj : batch) {
    if (traj.team_size != b.team_size || traj.obs_dim != w) {
      throw std::invalid_argument("make_batch: trajectories disagree on team size or observation width");
    }
    if (with_returns != !traj.returns.empty()) {
      throw std::invalid_argument("make_batch: returns attached to only some trajectories");
    }
    for (std::size_t t = 0; t < traj.transitions.size(); ++t) {
      const auto& tr = traj.transitions[t];
      obs.insert(obs.end(), tr.observations.begin(), tr.observations.end());
      next_obs.insert(next_obs.end(), tr.next_observations.begin(), tr.next_observations.end());
      b.actions.insert(b.actions.end(), tr.actions.begin(), tr.actions.end());
      b.log_probs.insert(b.log_probs.end(), tr.log_probs.begin(), tr.log_probs.end());
      b.rewards.insert(b.rewards.end(), tr.rewards.begin(), tr.rewards.end());
      if (with_returns) b.returns.insert(b.returns.end(), traj.returns[t].begin(), traj.returns[t].end());
      const bool last = t + 1 == traj.transitions.size();
      if (last) {
        b.next_actions.insert(b.next_actions.end(), tr.actions.begin(), tr.actions.end());
      } else {
        const auto& nx = traj.transitions[t + 1].actions;
        b.next_actions.insert(b.next_actions.end(), nx.begin(), nx.end());
      }
      b.done.push_back(tr.episode_done ? 1 : 0);
    }
  }
  const std::size_t rows = b.actions.size();
  if (obs.size() != rows * w || next_obs.size() != rows * w) {
    throw std::invalid_argument("make_batch: observation block sizes are inconsistent");
  }
  b.obs = Tensor::from(rows, w, std::move(obs));
  b.next_obs = Tensor::from(rows, w, std::move(next_obs));
  return b;
}

// ---- TAAC learner ---------------------------------------------------------

namespace {

void normalize(std::vector<double>& xs) {
  if (xs.size() < 2) return;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(xs.size()));
  for (double& x : xs) x = (x - mean) / (sd + 1e-8);
}

std::vector<Tensor> actor_trainables(const ActorNet& actor) { return tensors_of(actor.parameters()); }

std::vector<Tensor> critic_trainables(const CriticNet& critic, const AblationConfig& ablation) {
  NamedParams all = critic.parameters();
  if (!ablation.critic_v_fixed) return tensors_of(all);
  std::vector<Tensor> out;
  for (auto& [name, t] : all) {
    if (name.size() >= 6 && name.compare(name.size() - 6, 6, "/value") == 0) {
      t.set_requires_grad(false);
      continue;
    }
    out.push_back(t);
  }
  return out;
}

Tensor column(const std::vector<double>& v) { return Tensor::from(v.size(), 1, v); }

}  // namespace

TaacLearner::TaacLearner(const ArchConfig& arch, const AblationConfig& ablation, const LearnerOptions& options,
                         std::uint64_t seed)
    : arch_(arch),
      ablation_(ablation),
      options_(options),
      actor_([&] {
        Rng rng(seed);
        return ActorNet(arch, !ablation.actor_attention_off, rng);
      }()),
      critic_([&] {
        // Same stream as initial_snapshot: actor first, then critic.
        Rng rng(seed);
        ActorNet skip(arch, !ablation.actor_attention_off, rng);
        return CriticNet(arch, rng);
      }()),
      actor_opt_(actor_trainables(actor_), AdamOptions{options.actor_lr, 0.9, 0.999, 1e-8, options.max_grad_norm}),
      critic_opt_(critic_trainables(critic_, ablation),
                  AdamOptions{options.critic_lr, 0.9, 0.999, 1e-8, options.max_grad_norm}) {
  if (!(options_.gamma >= 0.0 && options_.gamma <= 1.0)) throw std::invalid_argument("TaacLearner: gamma outside [0, 1]");
}

PolicyKind TaacLearner::kind() const {
  return ablation_ == AblationConfig{} ? PolicyKind::taac : PolicyKind::taac_ablation;
}

std::vector<double> TaacLearner::advantages(const TeamBatch& batch) const {
  const auto cv = counterfactual_values(actor_, critic_, batch.obs, batch.actions, batch.team_size);
  std::vector<double> adv(cv.baseline.size());
  for (std::size_t r = 0; r < adv.size(); ++r) {
    const double target = options_.advantage == AdvantageMode::coma ? cv.q_taken[r] : batch.returns.at(r);
    adv[r] = target - cv.baseline[r];
  }
  return adv;
}

TaacLearner::ActorObjective TaacLearner::actor_objective(const TeamBatch& batch,
                                                         const std::vector<double>& advantages) const {
  if (advantages.size() != batch.actions.size()) {
    throw std::invalid_argument("actor_objective: one advantage per row required");
  }
  const auto out = actor_.forward(batch.obs, batch.team_size);
  const double rows = static_cast<double>(batch.actions.size());
  ActorObjective obj;
  // Policy gradient term; the advantage is a constant so no gradient reaches the critic.
  obj.policy = scale(sum(mul(gather_cols(out.log_probs, batch.actions), column(advantages))), -1.0 / rows);
  obj.entropy = scale(sum(mul(out.probs, out.log_probs)), -1.0 / rows);
  obj.total = sub(obj.policy, scale(obj.entropy, options_.entropy_coef));
  if (options_.conformity && batch.team_size >= 2) {
    obj.conformity = conformity_loss(out.embeddings, batch.team_size, options_.theta_s, options_.theta_b);
    obj.total = add(obj.total, obj.conformity);
  } else {
    obj.conformity = Tensor::scalar(0.0);
  }
  return obj;
}

std::vector<double> TaacLearner::critic_targets(const TeamBatch& batch) const {
  if (options_.critic_target == CriticTarget::monte_carlo) {
    if (batch.returns.size() != batch.actions.size()) throw std::invalid_argument("critic: returns not attached");
    return batch.returns;
  }
  NoGradGuard no_grad;
  const Tensor next_q = critic_.forward(batch.next_obs, batch.next_actions, batch.team_size).q;
  std::vector<double> y(batch.rewards.size());
  for (std::size_t r = 0; r < y.size(); ++r) {
    const bool done = batch.done[r / batch.team_size] != 0;
    y[r] = batch.rewards[r] + (done ? 0.0 : options_.gamma * next_q.data()[r]);
  }
  return y;
}

Tensor TaacLearner::critic_objective(const TeamBatch& batch) const {
  const auto targets = critic_targets(batch);
  const Tensor q = critic_.forward(batch.obs, batch.actions, batch.team_size).q;
  return mean(square(sub(q, column(targets))));
}

void TaacLearner::dump_batch(const TeamBatch& batch, const std::string& reason) const {
  if (options_.nan_dump_path.empty()) return;
  json doc;
  doc["reason"] = reason;
  doc["team_size"] = batch.team_size;
  doc["obs"] = std::vector<double>(batch.obs.data().begin(), batch.obs.data().end());
  doc["actions"] = batch.actions;
  doc["rewards"] = batch.rewards;
  doc["returns"] = batch.returns;
  write_text_file(options_.nan_dump_path, doc.dump());
}

UpdateReport TaacLearner::actor_update(const TeamBatch& batch) { return actor_update(batch, advantages(batch)); }

UpdateReport TaacLearner::actor_update(const TeamBatch& batch, const std::vector<double>& adv) {
  actor_opt_.zero_grad();
  const auto obj = actor_objective(batch, adv);
  UpdateReport rep;
  rep.samples = batch.actions.size();
  rep.policy_loss = obj.policy.item();
  rep.conformity = obj.conformity.item();
  rep.entropy = obj.entropy.item();
  double total = 0.0;
  for (double a : adv) total += a;
  rep.mean_advantage = total / static_cast<double>(adv.size());
  if (!std::isfinite(obj.total.item())) {
    dump_batch(batch, "non-finite actor loss");
    throw NumericError("actor_update: non-finite loss");
  }
  backward(obj.total);
  if (!gradients_finite(actor_opt_.params())) {
    dump_batch(batch, "non-finite actor gradient");
    actor_opt_.zero_grad();
    throw NumericError("actor_update: non-finite gradient");
  }
  actor_opt_.step();
  actor_opt_.zero_grad();
  return rep;
}

UpdateReport TaacLearner::critic_update(const TeamBatch& batch) {
  critic_opt_.zero_grad();
  const Tensor loss = critic_objective(batch);
  UpdateReport rep;
  rep.samples = batch.actions.size();
  rep.critic_loss = loss.item();
  if (!std::isfinite(rep.critic_loss)) {
    dump_batch(batch, "non-finite critic loss");
    throw NumericError("critic_update: non-finite loss");
  }
  backward(loss);
  if (!gradients_finite(critic_opt_.params())) {
    dump_batch(batch, "non-finite critic gradient");
    critic_opt_.zero_grad();
    throw NumericError("critic_update: non-finite gradient");
  }
  critic_opt_.step();
  critic_opt_.zero_grad();
  return rep;
}

UpdateReport TaacLearner::update(std::vector<Trajectory> episodes) {
  attach_returns(episodes, options_.gamma);
  const TeamBatch batch = make_batch(episodes);
  // The actor uses the critic as it was when the batch was collected.
  auto adv = advantages(batch);
  if (options_.normalize_advantages) normalize(adv);
  UpdateReport rep = actor_update(batch, adv);
  rep.critic_loss = critic_update(batch).critic_loss;
  return rep;
}

PolicySnapshot TaacLearner::snapshot(std::int64_t version) const {
  PolicySnapshot s;
  s.kind = kind();
  s.version = version;
  s.arch = arch_;
  s.ablation = ablation_;
  s.arch_hash = arch_.hash();
  s.weights = capture_weights(actor_.parameters());
  auto cw = capture_weights(critic_.parameters());
  s.weights.insert(s.weights.end(), cw.begin(), cw.end());
  return s;
}

std::string TaacLearner::save_state() const {
  json doc;
  doc["snapshot"] = jsonio::parse_or_throw(snapshot_to_json(snapshot(0)), "snapshot");
  doc["actor_opt"] = jsonio::to_json(actor_opt_.state());
  doc["critic_opt"] = jsonio::to_json(critic_opt_.state());
  return doc.dump();
}

void TaacLearner::load_state(std::string_view text) {
  const json doc = jsonio::parse_or_throw(text, "learner state");
  try {
    const PolicySnapshot snap = snapshot_from_json(doc.at("snapshot").dump());
    if (snap.arch != arch_ || snap.ablation != ablation_) {
      throw ConfigError("snapshot", "checkpoint architecture differs from the configured one");
    }
    restore_weights(snap.weights, actor_.parameters(), true);
    restore_weights(snap.weights, critic_.parameters(), true);
    actor_opt_.load_state(jsonio::adam_state_from_json(doc.at("actor_opt")));
    critic_opt_.load_state(jsonio::adam_state_from_json(doc.at("critic_opt")));
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("learner state: ") + e.what());
  }
}

}  // namespace taac
