#pragma once

// Uniform team-policy interface and immutable policy snapshots.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "taac/nets.hpp"
#include "taac/serialization.hpp"

namespace taac {

enum class PolicyKind { taac, taac_ablation, ppo, random };

std::string to_string(PolicyKind k);
PolicyKind policy_kind_from_string(const std::string& s);

// Frozen parameters of a policy (and, for learners, its critic or value
// network). Shared read-only between threads once published.
struct PolicySnapshot {
  PolicyKind kind = PolicyKind::random;
  std::int64_t version = 0;
  ArchConfig arch;
  AblationConfig ablation;
  std::string arch_hash;
  WeightSet weights;

  bool operator==(const PolicySnapshot&) const = default;
};
using SnapshotPtr = std::shared_ptr<const PolicySnapshot>;

// Header {kind, version, arch, ablation, arch_hash} plus the flat weight map.
std::string snapshot_to_json(const PolicySnapshot& snap);
// Throws ConfigError if the stored hash does not match the stored architecture.
PolicySnapshot snapshot_from_json(std::string_view text);
void save_snapshot(const std::filesystem::path& path, const PolicySnapshot& snap);
PolicySnapshot load_snapshot(const std::filesystem::path& path);

struct TeamAct {
  std::vector<int> actions;
  std::vector<double> log_probs;
};

class TeamPolicy {
 public:
  virtual ~TeamPolicy() = default;
  virtual PolicyKind kind() const = 0;
  // obs: team_size x obs_dim canonical observations of one timestep.
  virtual TeamAct act(const Tensor& obs, Rng& rng) const = 0;
  // Row-major team_size x 18 action probabilities.
  virtual std::vector<double> distributions(const Tensor& obs) const = 0;
};

// Uniform over all 18 actions, independently per agent.
class RandomPolicy final : public TeamPolicy {
 public:
  PolicyKind kind() const override { return PolicyKind::random; }
  TeamAct act(const Tensor& obs, Rng& rng) const override;
  std::vector<double> distributions(const Tensor& obs) const override;
};

// Always the no-op action; the stage-1 opponent.
class InactivePolicy final : public TeamPolicy {
 public:
  PolicyKind kind() const override { return PolicyKind::random; }
  TeamAct act(const Tensor& obs, Rng& rng) const override;
  std::vector<double> distributions(const Tensor& obs) const override;
};

class TaacPolicy final : public TeamPolicy {
 public:
  TaacPolicy(const ArchConfig& arch, const AblationConfig& ablation, Rng& init_rng);
  explicit TaacPolicy(const PolicySnapshot& snap);

  PolicyKind kind() const override;
  TeamAct act(const Tensor& obs, Rng& rng) const override;
  std::vector<double> distributions(const Tensor& obs) const override;
  const ActorNet& actor() const { return actor_; }

 private:
  AblationConfig ablation_;
  ActorNet actor_;
};

class PpoNets;

class PpoPolicy final : public TeamPolicy {
 public:
  explicit PpoPolicy(const PolicySnapshot& snap);
  ~PpoPolicy() override;

  PolicyKind kind() const override { return PolicyKind::ppo; }
  TeamAct act(const Tensor& obs, Rng& rng) const override;
  std::vector<double> distributions(const Tensor& obs) const override;

 private:
  std::unique_ptr<PpoNets> nets_;
};

// Canonical observations of one team's players as a team_size x width matrix.
Tensor team_observations(const soccer::WorldState& s, int team, const soccer::EnvConfig& cfg);
// Writes a team's canonical-frame actions into the world joint action.
void place_team_actions(soccer::JointAction& joint, int team, const std::vector<int>& canonical,
                        const soccer::EnvConfig& cfg);

// n independent uniform draws from 0..17.
soccer::JointAction random_action(std::size_t n, Rng& rng);

// Samples one action per row of a probability matrix.
TeamAct sample_actions(std::span<const double> probs, std::size_t rows, std::size_t cols, Rng& rng);

// Freshly initialized policy of the given kind.
std::unique_ptr<TeamPolicy> build_policy(PolicyKind kind, const ArchConfig& arch, const AblationConfig& ablation,
                                         Rng& init_rng);
std::unique_ptr<TeamPolicy> policy_from_snapshot(const PolicySnapshot& snap);

// Snapshot of a freshly initialized policy of any kind.
PolicySnapshot initial_snapshot(PolicyKind kind, const ArchConfig& arch, const AblationConfig& ablation,
                                std::uint64_t seed);

}  // namespace taac
