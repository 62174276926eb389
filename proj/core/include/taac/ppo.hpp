#pragma once

// Independent PPO baseline: one shared per-agent policy and value network
// that only ever sees an agent's own observation.

#include <cstdint>
#include <vector>

#include "taac/learner.hpp"

namespace taac {

class PpoNets {
 public:
  PpoNets(const ArchConfig& arch, Rng& rng);

  Tensor logits(const Tensor& obs) const;  // rows x actions
  Tensor values(const Tensor& obs) const;  // rows x 1
  NamedParams parameters() const;
  const ArchConfig& arch() const { return arch_; }

 private:
  ArchConfig arch_;
  Mlp policy_;
  Mlp value_;
};

struct PpoOptions {
  double clip = 0.2;
  double gae_lambda = 0.95;
  double gamma = 0.99;
  int epochs = 4;
  int minibatches = 1;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double learning_rate = 3e-4;
  double max_grad_norm = 5.0;
};

struct PpoBatch {
  Tensor obs;                       // N x obs_dim, one row per agent-step
  std::vector<int> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;   // GAE
  std::vector<double> returns;      // value targets = advantages + values
};

// GAE(lambda) per agent per episode; terminal bootstrap value is zero.
PpoBatch make_ppo_batch(const std::vector<Trajectory>& episodes, const PpoNets& nets, const PpoOptions& opt);
PpoBatch slice_ppo_batch(const PpoBatch& b, const std::vector<std::size_t>& rows);

struct PpoLoss {
  Tensor total;
  Tensor policy;
  Tensor value;
  Tensor entropy;
  Tensor ratio;
};
PpoLoss ppo_loss(const PpoNets& nets, const PpoBatch& batch, const PpoOptions& opt);

// `epochs` passes of clipped-surrogate updates over the batch.
UpdateReport ppo_update(const PpoBatch& batch, PpoNets& nets, Adam& opt, const PpoOptions& options, Rng& rng);

class PpoLearner final : public Learner {
 public:
  PpoLearner(const ArchConfig& arch, const PpoOptions& options, std::uint64_t seed);

  PolicyKind kind() const override { return PolicyKind::ppo; }
  UpdateReport update(std::vector<Trajectory> episodes) override;
  PolicySnapshot snapshot(std::int64_t version) const override;
  std::string save_state() const override;
  void load_state(std::string_view text) override;

  PpoNets& nets() { return nets_; }

 private:
  ArchConfig arch_;
  PpoOptions options_;
  PpoNets nets_;
  Adam opt_;
  Rng rng_;
};

}  // namespace taac
