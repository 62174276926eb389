#pragma once

#include <cstdint>
#include <vector>

#include "taac/tensor.hpp"

namespace taac {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global L2 gradient-norm clip; <= 0 disables.
  double max_grad_norm = 5.0;
};

struct AdamState {
  std::int64_t steps = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options);

  // Applies one update from the accumulated gradients. Throws NumericError and
  // leaves parameters untouched if any gradient is non-finite. Returns the
  // pre-clip global gradient norm.
  double step();
  void zero_grad();

  const AdamOptions& options() const { return options_; }
  const std::vector<Tensor>& params() const { return params_; }
  const AdamState& state() const { return state_; }
  void load_state(AdamState state);

 private:
  std::vector<Tensor> params_;
  AdamOptions options_;
  AdamState state_;
};

// Global L2 norm of the gradients of `params`.
double gradient_norm(const std::vector<Tensor>& params);
bool gradients_finite(const std::vector<Tensor>& params);

}  // namespace taac
