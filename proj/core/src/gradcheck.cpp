#include "taac/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace taac {

GradCheckResult grad_check(const std::function<Tensor()>& build_loss, const std::vector<Tensor>& params,
                           double eps) {
  std::vector<Tensor> ps = params;
  for (auto& p : ps) p.zero_grad();
  backward(build_loss());
  std::vector<std::vector<double>> analytic;
  for (const auto& p : ps) analytic.emplace_back(p.grad().begin(), p.grad().end());

  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    auto w = ps[k].mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + eps;
      const double up = build_loss().item();
      w[i] = saved - eps;
      const double down = build_loss().item();
      w[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k][i];
      const double err = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
      result.max_relative_error = std::max(result.max_relative_error, err);
      ++result.coordinates;
    }
  }
  for (auto& p : ps) p.zero_grad();
  return result;
}

}  // namespace taac
