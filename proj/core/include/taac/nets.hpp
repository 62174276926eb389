#pragma once

// Team-attention actor and critic, the counterfactual baseline and the
// conformity loss.
//
// Every forward pass takes a stack of token groups: rows g*n .. g*n+n-1 are
// the n agents of one team at one timestep. Attention never crosses groups.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "taac/nn.hpp"
#include "taac/soccer.hpp"

namespace taac {

struct ArchConfig {
  int obs_dim = 22;
  int action_count = soccer::kActionCount;
  int d_model = 64;
  int actor_heads = 4;
  int critic_heads = 4;
  // Hidden widths of the embedding MLP; its output layer has width d_model.
  std::vector<int> embed_hidden{64};
  // Hidden widths of the post-attention MLP before the output layer.
  std::vector<int> post_hidden{64, 64};
  // Hidden widths of the independent PPO policy and value networks.
  std::vector<int> ppo_hidden{64, 64};
  Activation activation = Activation::relu;
  // Scale applied to the Xavier bound of the actor's logit layer.
  double logit_init_gain = 0.01;
  // Observations are multiplied by this before entering any network.
  double input_scale = 0.02;

  void validate() const;
  // Stable 64-bit FNV-1a digest of every field, as 16 hex digits.
  std::string hash() const;
  bool operator==(const ArchConfig&) const = default;
};

struct AblationConfig {
  // Actor becomes a per-agent MLP (embedding straight into the head).
  bool actor_attention_off = false;
  // Critic attention value matrices stay at their initial values.
  bool critic_v_fixed = false;
  bool operator==(const AblationConfig&) const = default;
};

struct ActorOutput {
  Tensor logits;      // rows x actions
  Tensor log_probs;   // rows x actions
  Tensor probs;       // rows x actions
  Tensor embeddings;  // rows x (heads * d_v): attended embeddings E_i
  std::vector<Tensor> attention;
};

class ActorNet {
 public:
  ActorNet(const ArchConfig& arch, bool attention_enabled, Rng& rng);

  // obs: (groups * n) x obs_dim
  ActorOutput forward(const Tensor& obs, std::size_t group) const;

  NamedParams parameters() const;
  const ArchConfig& arch() const { return arch_; }
  bool attention_enabled() const { return attention_enabled_; }
  Mlp& embed() { return embed_; }
  MultiHeadAttention& attention() { return attention_; }
  Mlp& post() { return post_; }

 private:
  ArchConfig arch_;
  bool attention_enabled_;
  Mlp embed_;
  MultiHeadAttention attention_;
  Mlp post_;
};

struct CriticOutput {
  Tensor q;          // rows x 1
  Tensor embedding;  // rows x d_model, the original per-agent embedding
  Tensor attended;   // rows x (heads * d_v)
  std::vector<Tensor> attention;
};

class CriticNet {
 public:
  CriticNet(const ArchConfig& arch, Rng& rng);

  // obs: (groups * n) x obs_dim, actions: one id per row.
  CriticOutput forward(const Tensor& obs, std::span<const int> actions, std::size_t group) const;

  NamedParams parameters() const;
  // Attention value matrices only.
  NamedParams value_matrices() const;
  const ArchConfig& arch() const { return arch_; }
  Mlp& embed() { return embed_; }
  MultiHeadAttention& attention() { return attention_; }
  Mlp& post() { return post_; }

 private:
  ArchConfig arch_;
  Mlp embed_;
  MultiHeadAttention attention_;
  Mlp post_;
};

// [obs | one_hot(action)] per row.
Tensor critic_input(const Tensor& obs, std::span<const int> actions, int action_count);

// Counterfactual values for every row of a batch: for row r (agent i of its
// group), q_all[r*A + a] = Q_i(o, (a, a_-i)) and
// baseline[r] = sum_a pi_i(a|o) q_all[r*A + a]. Evaluated without recording a
// graph; `chunk_groups` bounds how many groups are expanded at once.
struct CounterfactualValues {
  std::vector<double> baseline;
  std::vector<double> q_all;
  std::vector<double> q_taken;  // Q_i(o, a) for the actions actually taken
};
CounterfactualValues counterfactual_values(const ActorNet& actor, const CriticNet& critic, const Tensor& obs,
                                           std::span<const int> actions, std::size_t group,
                                           std::size_t chunk_groups = 64);

// b_i for agent `agent` of a single group (obs is n x obs_dim).
double counterfactual_baseline(std::size_t agent, const Tensor& obs, std::span<const int> actions,
                               const ActorNet& actor, const CriticNet& critic);

// theta_s * mean over groups of max(mean pairwise cosine of the group's
// embeddings, theta_b). Norms are guarded by `eps`.
Tensor conformity_loss(const Tensor& embeddings, std::size_t group, double theta_s, double theta_b,
                       double eps = 1e-8);

}  // namespace taac
