#pragma once

// Gradient updates for the team-attention actor-critic and the generic
// learner interface the curriculum driver trains against.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "taac/nets.hpp"
#include "taac/optim.hpp"
#include "taac/policy.hpp"
#include "taac/trajectory.hpp"

namespace taac {

enum class AdvantageMode { monte_carlo, coma };
enum class CriticTarget { monte_carlo, td };

struct LearnerOptions {
  double gamma = 0.99;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  double max_grad_norm = 5.0;
  double theta_s = 0.05;
  double theta_b = 0.3;
  double entropy_coef = 0.01;
  bool conformity = true;
  AdvantageMode advantage = AdvantageMode::monte_carlo;
  CriticTarget critic_target = CriticTarget::monte_carlo;
  // Rescale each batch's advantages to zero mean and unit variance before the
  // actor step.
  bool normalize_advantages = false;
  // Where to write the offending batch when an update hits a non-finite value.
  std::string nan_dump_path;
};

struct UpdateReport {
  double policy_loss = 0.0;
  double conformity = 0.0;
  double entropy = 0.0;
  double mean_advantage = 0.0;
  double critic_loss = 0.0;
  std::size_t samples = 0;
};

// Trajectories flattened into one stack of token groups.
struct TeamBatch {
  std::size_t team_size = 0;
  Tensor obs;                      // (T * n) x obs_dim
  std::vector<int> actions;        // T * n
  std::vector<double> log_probs;   // T * n, behaviour policy
  std::vector<double> rewards;     // T * n
  std::vector<double> returns;     // T * n, empty unless returns were attached
  Tensor next_obs;                 // (T * n) x obs_dim
  std::vector<int> next_actions;   // T * n, own action at t+1 (arbitrary when done)
  std::vector<char> done;          // T

  std::size_t steps() const { return done.size(); }
};

TeamBatch make_batch(const std::vector<Trajectory>& batch);

class Learner {
 public:
  virtual ~Learner() = default;
  virtual PolicyKind kind() const = 0;
  virtual UpdateReport update(std::vector<Trajectory> episodes) = 0;
  virtual PolicySnapshot snapshot(std::int64_t version) const = 0;
  // Full trainable state (weights and optimizer moments) for checkpoints.
  virtual std::string save_state() const = 0;
  virtual void load_state(std::string_view text) = 0;
};

class TaacLearner final : public Learner {
 public:
  TaacLearner(const ArchConfig& arch, const AblationConfig& ablation, const LearnerOptions& options,
              std::uint64_t seed);

  PolicyKind kind() const override;
  UpdateReport update(std::vector<Trajectory> episodes) override;
  PolicySnapshot snapshot(std::int64_t version) const override;
  std::string save_state() const override;
  void load_state(std::string_view text) override;

  // One critic step on a batch with returns attached.
  UpdateReport critic_update(const TeamBatch& batch);
  // One actor step; advantages are recomputed from the current critic.
  UpdateReport actor_update(const TeamBatch& batch);
  // One actor step with caller-supplied advantages (one per row).
  UpdateReport actor_update(const TeamBatch& batch, const std::vector<double>& advantages);

  // Advantage per row: G - b or Q - b depending on options().advantage.
  std::vector<double> advantages(const TeamBatch& batch) const;

  // Differentiable objectives (minimized). Advantages are constants.
  struct ActorObjective {
    Tensor total;
    Tensor policy;
    Tensor conformity;
    Tensor entropy;
  };
  ActorObjective actor_objective(const TeamBatch& batch, const std::vector<double>& advantages) const;
  Tensor critic_objective(const TeamBatch& batch) const;

  ActorNet& actor() { return actor_; }
  CriticNet& critic() { return critic_; }
  const ActorNet& actor() const { return actor_; }
  const CriticNet& critic() const { return critic_; }
  const LearnerOptions& options() const { return options_; }
  const AblationConfig& ablation() const { return ablation_; }
  const Adam& actor_optimizer() const { return actor_opt_; }
  const Adam& critic_optimizer() const { return critic_opt_; }

 private:
  std::vector<double> critic_targets(const TeamBatch& batch) const;
  void dump_batch(const TeamBatch& batch, const std::string& reason) const;

  ArchConfig arch_;
  AblationConfig ablation_;
  LearnerOptions options_;
  ActorNet actor_;
  CriticNet critic_;
  Adam actor_opt_;
  Adam critic_opt_;
};

}  // namespace taac
