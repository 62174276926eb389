#pragma once

#include <vector>

#include "taac/nets.hpp"
#include "taac/rng.hpp"
#include "taac/tensor.hpp"

namespace taac::testing {

inline std::vector<double> uniform_values(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

inline Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return Tensor::from(r, c, uniform_values(r * c, rng, lo, hi));
}

inline Tensor random_param(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  return Tensor::parameter(r, c, uniform_values(r * c, rng, lo, hi));
}

inline ArchConfig small_arch(int obs_dim = 6, Activation act = Activation::tanh) {
  ArchConfig a;
  a.obs_dim = obs_dim;
  a.d_model = 8;
  a.actor_heads = 2;
  a.critic_heads = 2;
  a.embed_hidden = {8};
  a.post_hidden = {8};
  a.ppo_hidden = {8};
  a.activation = act;
  a.logit_init_gain = 1.0;
  a.input_scale = 1.0;
  return a;
}

// Row-major copy of rows of `t` in the given order.
inline std::vector<double> permute_rows(std::span<const double> t, std::size_t cols,
                                        const std::vector<std::size_t>& order) {
  std::vector<double> out;
  for (std::size_t r : order) out.insert(out.end(), t.begin() + r * cols, t.begin() + (r + 1) * cols);
  return out;
}

}  // namespace taac::testing
