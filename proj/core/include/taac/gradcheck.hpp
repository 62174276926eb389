#pragma once

#include <functional>
#include <vector>

#include "taac/tensor.hpp"

namespace taac {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

// Compares reverse-mode gradients of `build_loss` against central differences
// over every coordinate of `params`. The error per coordinate is
//   |analytic - numeric| / (|analytic| + |numeric| + 1e-12).
// `build_loss` must rebuild the graph from the current parameter values.
GradCheckResult grad_check(const std::function<Tensor()>& build_loss, const std::vector<Tensor>& params,
                           double eps = 1e-5);

}  // namespace taac
