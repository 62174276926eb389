#pragma once

// The finite-difference suite run by `taac gradcheck`: every trainable loss
// on small tanh networks (smooth everywhere) over several seeds.

#include <cstdint>
#include <string>
#include <vector>

namespace taac {

struct GradientCase {
  std::string name;
  std::uint64_t seed = 0;
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

struct GradientSuiteReport {
  std::vector<GradientCase> cases;
  double max_relative_error() const;
  bool passed(double tolerance = 1e-4) const { return max_relative_error() < tolerance; }
};

// Cases: actor log-prob loss, critic MSE, conformity, PPO surrogate.
GradientSuiteReport run_gradient_suite(int seeds = 10, double eps = 1e-5);

}  // namespace taac
