#include "taac/policy.hpp"

#include <cmath>
#include <stdexcept>

#include "json_io.hpp"
#include "taac/ppo.hpp"

namespace taac {

using jsonio::json;

std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::taac: return "taac";
    case PolicyKind::taac_ablation: return "taac_ablation";
    case PolicyKind::ppo: return "ppo";
    case PolicyKind::random: return "random";
  }
  return "random";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "taac") return PolicyKind::taac;
  if (s == "taac_ablation") return PolicyKind::taac_ablation;
  if (s == "ppo") return PolicyKind::ppo;
  if (s == "random") return PolicyKind::random;
  throw std::invalid_argument("unknown policy kind '" + s + "' (expected taac, taac_ablation, ppo or random)");
}

// ---- snapshot files -------------------------------------------------------

std::string snapshot_to_json(const PolicySnapshot& snap) {
  json doc;
  doc["header"] = {{"kind", to_string(snap.kind)},
                   {"version", snap.version},
                   {"arch_hash", snap.arch_hash},
                   {"arch", jsonio::to_json(snap.arch)},
                   {"ablation", jsonio::to_json(snap.ablation)}};
  doc["weights"] = jsonio::parse_or_throw(weights_to_json(snap.weights), "weights");
  return doc.dump();
}

PolicySnapshot snapshot_from_json(std::string_view text) {
  const json doc = jsonio::parse_or_throw(text, "snapshot");
  jsonio::FieldReader top(doc, "");
  PolicySnapshot snap;
  {
    auto h = top.child("header");
    h.read_enum("kind", snap.kind, policy_kind_from_string);
    int version = 0;
    h.read("version", version);
    snap.version = version;
    h.read("arch_hash", snap.arch_hash);
    jsonio::read_into(h.child("arch"), snap.arch);
    jsonio::read_into(h.child("ablation"), snap.ablation);
    h.finish();
  }
  if (!doc.contains("weights")) throw ConfigError("weights", "missing");
  snap.weights = weights_from_json(doc["weights"].dump());
  top.child("weights");
  top.finish();
  if (snap.arch_hash != snap.arch.hash()) {
    throw ConfigError("header.arch_hash", "architecture hash " + snap.arch_hash +
                                              " does not match the stored architecture (" + snap.arch.hash() + ")");
  }
  return snap;
}

void save_snapshot(const std::filesystem::path& path, const PolicySnapshot& snap) {
  write_text_file(path, snapshot_to_json(snap));
}

PolicySnapshot load_snapshot(const std::filesystem::path& path) {
  try {
    return snapshot_from_json(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(e.key(), path.string() + ": " + e.detail());
  }
}

Tensor team_observations(const soccer::WorldState& s, int team, const soccer::EnvConfig& cfg) {
  const std::size_t w = static_cast<std::size_t>(soccer::observation_width(cfg));
  std::vector<double> data;
  data.reserve(w * static_cast<std::size_t>(cfg.team_size));
  for (int i = team * cfg.team_size; i < (team + 1) * cfg.team_size; ++i) {
    const auto o = soccer::observe_canonical(s, i, cfg);
    data.insert(data.end(), o.begin(), o.end());
  }
  return Tensor::from(static_cast<std::size_t>(cfg.team_size), w, std::move(data));
}

void place_team_actions(soccer::JointAction& joint, int team, const std::vector<int>& canonical,
                        const soccer::EnvConfig& cfg) {
  if (canonical.size() != static_cast<std::size_t>(cfg.team_size)) {
    throw std::invalid_argument("place_team_actions: expected one action per team member");
  }
  joint.resize(static_cast<std::size_t>(cfg.player_count()), soccer::kNoOpAction);
  for (int k = 0; k < cfg.team_size; ++k)
    joint[static_cast<std::size_t>(team * cfg.team_size + k)] =
        soccer::canonical_to_world_action(canonical[static_cast<std::size_t>(k)], team);
}

// ---- sampling -------------------------------------------------------------

TeamAct sample_actions(std::span<const double> probs, std::size_t rows, std::size_t cols, Rng& rng) {
  TeamAct out;
  out.actions.reserve(rows);
  out.log_probs.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = probs.subspan(r * cols, cols);
    const int a = rng.categorical(row);
    out.actions.push_back(a);
    out.log_probs.push_back(std::log(row[static_cast<std::size_t>(a)]));
  }
  return out;
}

soccer::JointAction random_action(std::size_t n, Rng& rng) {
  soccer::JointAction a(n);
  for (auto& x : a) x = static_cast<int>(rng.below(soccer::kActionCount));
  return a;
}

TeamAct RandomPolicy::act(const Tensor& obs, Rng& rng) const {
  TeamAct out;
  out.actions = random_action(obs.rows(), rng);
  out.log_probs.assign(obs.rows(), -std::log(static_cast<double>(soccer::kActionCount)));
  return out;
}

std::vector<double> RandomPolicy::distributions(const Tensor& obs) const {
  return std::vector<double>(obs.rows() * soccer::kActionCount, 1.0 / soccer::kActionCount);
}

TeamAct InactivePolicy::act(const Tensor& obs, Rng&) const {
  return {std::vector<int>(obs.rows(), soccer::kNoOpAction), std::vector<double>(obs.rows(), 0.0)};
}

std::vector<double> InactivePolicy::distributions(const Tensor& obs) const {
  std::vector<double> p(obs.rows() * soccer::kActionCount, 0.0);
  for (std::size_t r = 0; r < obs.rows(); ++r) p[r * soccer::kActionCount + soccer::kNoOpAction] = 1.0;
  return p;
}

// ---- TAAC -----------------------------------------------------------------

TaacPolicy::TaacPolicy(const ArchConfig& arch, const AblationConfig& ablation, Rng& init_rng)
    : ablation_(ablation), actor_(arch, !ablation.actor_attention_off, init_rng) {}

namespace {
Rng& scratch_rng() {
  thread_local Rng rng(0);
  return rng;
}
}  // namespace

TaacPolicy::TaacPolicy(const PolicySnapshot& snap)
    : ablation_(snap.ablation), actor_(snap.arch, !snap.ablation.actor_attention_off, scratch_rng()) {
  if (snap.kind != PolicyKind::taac && snap.kind != PolicyKind::taac_ablation) {
    throw ConfigError("header.kind", "snapshot of kind " + to_string(snap.kind) + " is not a TAAC policy");
  }
  restore_weights(snap.weights, actor_.parameters(), true);
}

PolicyKind TaacPolicy::kind() const {
  return ablation_ == AblationConfig{} ? PolicyKind::taac : PolicyKind::taac_ablation;
}

TeamAct TaacPolicy::act(const Tensor& obs, Rng& rng) const {
  NoGradGuard no_grad;
  const Tensor probs = actor_.forward(obs, obs.rows()).probs;
  return sample_actions(probs.data(), probs.rows(), probs.cols(), rng);
}

std::vector<double> TaacPolicy::distributions(const Tensor& obs) const {
  NoGradGuard no_grad;
  const Tensor probs = actor_.forward(obs, obs.rows()).probs;
  return {probs.data().begin(), probs.data().end()};
}

// ---- PPO ------------------------------------------------------------------

PpoPolicy::PpoPolicy(const PolicySnapshot& snap) {
  if (snap.kind != PolicyKind::ppo) {
    throw ConfigError("header.kind", "snapshot of kind " + to_string(snap.kind) + " is not a PPO policy");
  }
  nets_ = std::make_unique<PpoNets>(snap.arch, scratch_rng());
  restore_weights(snap.weights, nets_->parameters(), false);
}

PpoPolicy::~PpoPolicy() = default;

TeamAct PpoPolicy::act(const Tensor& obs, Rng& rng) const {
  NoGradGuard no_grad;
  const Tensor probs = softmax_rows(nets_->logits(obs));
  return sample_actions(probs.data(), probs.rows(), probs.cols(), rng);
}

std::vector<double> PpoPolicy::distributions(const Tensor& obs) const {
  NoGradGuard no_grad;
  const Tensor probs = softmax_rows(nets_->logits(obs));
  return {probs.data().begin(), probs.data().end()};
}

// ---- factories ------------------------------------------------------------

PolicySnapshot initial_snapshot(PolicyKind kind, const ArchConfig& arch, const AblationConfig& ablation,
                                std::uint64_t seed) {
  PolicySnapshot snap;
  snap.kind = kind;
  snap.arch = arch;
  snap.arch_hash = arch.hash();
  Rng rng(seed);
  switch (kind) {
    case PolicyKind::taac:
    case PolicyKind::taac_ablation: {
      snap.ablation = kind == PolicyKind::taac ? AblationConfig{} : ablation;
      ActorNet actor(arch, !snap.ablation.actor_attention_off, rng);
      CriticNet critic(arch, rng);
      snap.weights = capture_weights(actor.parameters());
      auto cw = capture_weights(critic.parameters());
      snap.weights.insert(snap.weights.end(), cw.begin(), cw.end());
      break;
    }
    case PolicyKind::ppo: {
      PpoNets nets(arch, rng);
      snap.weights = capture_weights(nets.parameters());
      break;
    }
    case PolicyKind::random:
      break;
  }
  return snap;
}

std::unique_ptr<TeamPolicy> policy_from_snapshot(const PolicySnapshot& snap) {
  switch (snap.kind) {
    case PolicyKind::taac:
    case PolicyKind::taac_ablation: return std::make_unique<TaacPolicy>(snap);
    case PolicyKind::ppo: return std::make_unique<PpoPolicy>(snap);
    case PolicyKind::random: return std::make_unique<RandomPolicy>();
  }
  return std::make_unique<RandomPolicy>();
}

std::unique_ptr<TeamPolicy> build_policy(PolicyKind kind, const ArchConfig& arch, const AblationConfig& ablation,
                                         Rng& init_rng) {
  return policy_from_snapshot(initial_snapshot(kind, arch, ablation, init_rng.next_u64()));
}

}  // namespace taac
