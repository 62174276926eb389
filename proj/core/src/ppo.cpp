#include "taac/ppo.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json_io.hpp"

namespace taac {

using jsonio::json;

namespace {

std::vector<std::size_t> widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<std::size_t> w{static_cast<std::size_t>(in)};
  for (int h : hidden) w.push_back(static_cast<std::size_t>(h));
  w.push_back(static_cast<std::size_t>(out));
  return w;
}

Tensor column(const std::vector<double>& v) { return Tensor::from(v.size(), 1, v); }

}  // namespace

PpoNets::PpoNets(const ArchConfig& arch, Rng& rng) : arch_(arch) {
  arch_.validate();
  policy_ = Mlp(widths(arch_.obs_dim, arch_.ppo_hidden, arch_.action_count), arch_.activation,
                Activation::identity, rng);
  value_ = Mlp(widths(arch_.obs_dim, arch_.ppo_hidden, 1), arch_.activation, Activation::identity, rng);
  if (arch_.logit_init_gain != 1.0) {
    for (double& w : policy_.layers().back().weight.mutable_data()) w *= arch_.logit_init_gain;
  }
}

Tensor PpoNets::logits(const Tensor& obs) const { return policy_.forward(scale(obs, arch_.input_scale)); }
Tensor PpoNets::values(const Tensor& obs) const { return value_.forward(scale(obs, arch_.input_scale)); }

NamedParams PpoNets::parameters() const {
  NamedParams p;
  policy_.collect("ppo/policy", p);
  value_.collect("ppo/value", p);
  return p;
}

PpoBatch make_ppo_batch(const std::vector<Trajectory>& episodes, const PpoNets& nets, const PpoOptions& opt) {
  if (episodes.empty()) throw std::invalid_argument("make_ppo_batch: empty batch");
  NoGradGuard no_grad;
  PpoBatch b;
  std::vector<double> obs;
  const std::size_t w = static_cast<std::size_t>(nets.arch().obs_dim);
  for (const auto& ep : episodes) {
    if (ep.transitions.empty()) continue;
    if (ep.obs_dim != w) throw std::invalid_argument("make_ppo_batch: observation width mismatch");
    if (!ep.transitions.back().episode_done) throw std::invalid_argument("make_ppo_batch: incomplete episode");
    const std::size_t T = ep.transitions.size();
    const std::size_t n = ep.team_size;
    std::vector<double> ep_obs;
    ep_obs.reserve(T * n * w);
    for (const auto& tr : ep.transitions) ep_obs.insert(ep_obs.end(), tr.observations.begin(), tr.observations.end());
    const Tensor v = nets.values(Tensor::from(T * n, w, ep_obs));
    std::vector<double> adv(T * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double next_adv = 0.0;
      for (std::size_t t = T; t-- > 0;) {
        const bool last = t + 1 == T;
        const double next_v = last ? 0.0 : v.data()[(t + 1) * n + i];
        const double delta = ep.transitions[t].rewards[i] + opt.gamma * next_v - v.data()[t * n + i];
        next_adv = delta + (last ? 0.0 : opt.gamma * opt.gae_lambda * next_adv);
        adv[t * n + i] = next_adv;
      }
    }
    for (std::size_t t = 0; t < T; ++t) {
      const auto& tr = ep.transitions[t];
      b.actions.insert(b.actions.end(), tr.actions.begin(), tr.actions.end());
      b.old_log_probs.insert(b.old_log_probs.end(), tr.log_probs.begin(), tr.log_probs.end());
    }
    for (std::size_t r = 0; r < T * n; ++r) {
      b.advantages.push_back(adv[r]);
      b.returns.push_back(adv[r] + v.data()[r]);
    }
    obs.insert(obs.end(), ep_obs.begin(), ep_obs.end());
  }
  if (b.actions.empty()) throw std::invalid_argument("make_ppo_batch: no transitions");
  b.obs = Tensor::from(b.actions.size(), w, std::move(obs));
  return b;
}

PpoBatch slice_ppo_batch(const PpoBatch& b, const std::vector<std::size_t>& rows) {
  PpoBatch s;
  s.obs = select_rows(b.obs, rows).detach();
  for (std::size_t r : rows) {
    s.actions.push_back(b.actions.at(r));
    s.old_log_probs.push_back(b.old_log_probs.at(r));
    s.advantages.push_back(b.advantages.at(r));
    s.returns.push_back(b.returns.at(r));
  }
  return s;
}

PpoLoss ppo_loss(const PpoNets& nets, const PpoBatch& batch, const PpoOptions& opt) {
  const double rows = static_cast<double>(batch.actions.size());
  const Tensor log_probs = log_softmax_rows(nets.logits(batch.obs));
  const Tensor probs = softmax_rows(nets.logits(batch.obs));
  PpoLoss loss;
  const Tensor logp = gather_cols(log_probs, batch.actions);
  loss.ratio = exp(sub(logp, column(batch.old_log_probs)));
  const Tensor adv = column(batch.advantages);
  const Tensor unclipped = mul(loss.ratio, adv);
  const Tensor clipped = mul(clamp(loss.ratio, 1.0 - opt.clip, 1.0 + opt.clip), adv);
  loss.policy = scale(sum(minimum(unclipped, clipped)), -1.0 / rows);
  loss.value = mean(square(sub(nets.values(batch.obs), column(batch.returns))));
  loss.entropy = scale(sum(mul(probs, log_probs)), -1.0 / rows);
  loss.total = add(add(loss.policy, scale(loss.value, opt.value_coef)), scale(loss.entropy, -opt.entropy_coef));
  return loss;
}

UpdateReport ppo_update(const PpoBatch& batch, PpoNets& nets, Adam& opt, const PpoOptions& options, Rng& rng) {
  const std::size_t n = batch.actions.size();
  const std::size_t parts = static_cast<std::size_t>(std::max(1, options.minibatches));
  UpdateReport rep;
  rep.samples = n;
  rep.mean_advantage = std::accumulate(batch.advantages.begin(), batch.advantages.end(), 0.0) / static_cast<double>(n);
  std::vector<std::size_t> order(n);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (parts > 1) {
      for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }
    for (std::size_t p = 0; p < parts; ++p) {
      const std::size_t lo = n * p / parts;
      const std::size_t hi = n * (p + 1) / parts;
      if (lo == hi) continue;
      const PpoBatch mb = parts > 1 ? slice_ppo_batch(batch, {order.begin() + lo, order.begin() + hi}) : batch;
      opt.zero_grad();
      const PpoLoss loss = ppo_loss(nets, mb, options);
      if (!std::isfinite(loss.total.item())) throw NumericError("ppo_update: non-finite loss");
      backward(loss.total);
      opt.step();
      opt.zero_grad();
      rep.policy_loss = loss.policy.item();
      rep.critic_loss = loss.value.item();
      rep.entropy = loss.entropy.item();
    }
  }
  return rep;
}

PpoLearner::PpoLearner(const ArchConfig& arch, const PpoOptions& options, std::uint64_t seed)
    : arch_(arch),
      options_(options),
      nets_([&] {
        Rng rng(seed);
        return PpoNets(arch, rng);
      }()),
      opt_(tensors_of(nets_.parameters()),
           AdamOptions{options.learning_rate, 0.9, 0.999, 1e-8, options.max_grad_norm}),
      rng_(derive_seed(seed, 1)) {
  if (!(options_.gamma >= 0.0 && options_.gamma <= 1.0)) throw std::invalid_argument("PpoLearner: gamma outside [0, 1]");
  if (!(options_.clip > 0.0)) throw std::invalid_argument("PpoLearner: clip must be positive");
}

UpdateReport PpoLearner::update(std::vector<Trajectory> episodes) {
  return ppo_update(make_ppo_batch(episodes, nets_, options_), nets_, opt_, options_, rng_);
}

PolicySnapshot PpoLearner::snapshot(std::int64_t version) const {
  PolicySnapshot s;
  s.kind = PolicyKind::ppo;
  s.version = version;
  s.arch = arch_;
  s.arch_hash = arch_.hash();
  s.weights = capture_weights(nets_.parameters());
  return s;
}

std::string PpoLearner::save_state() const {
  json doc;
  doc["snapshot"] = jsonio::parse_or_throw(snapshot_to_json(snapshot(0)), "snapshot");
  doc["opt"] = jsonio::to_json(opt_.state());
  doc["rng"] = rng_.state();
  return doc.dump();
}

void PpoLearner::load_state(std::string_view text) {
  const json doc = jsonio::parse_or_throw(text, "learner state");
  try {
    const PolicySnapshot snap = snapshot_from_json(doc.at("snapshot").dump());
    if (snap.arch != arch_) throw ConfigError("snapshot", "checkpoint architecture differs from the configured one");
    restore_weights(snap.weights, nets_.parameters());
    opt_.load_state(jsonio::adam_state_from_json(doc.at("opt")));
    rng_.set_state(doc.at("rng").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError("", std::string("learner state: ") + e.what());
  }
}

}  // namespace taac
