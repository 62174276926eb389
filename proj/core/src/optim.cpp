#include "taac/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "taac/errors.hpp"

namespace taac {

Adam::Adam(std::vector<Tensor> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const auto& p : params_) {
    if (!p.requires_grad()) throw std::invalid_argument("Adam: parameter does not require grad");
    state_.first_moment.emplace_back(p.size(), 0.0);
    state_.second_moment.emplace_back(p.size(), 0.0);
  }
}

double gradient_norm(const std::vector<Tensor>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

bool gradients_finite(const std::vector<Tensor>& params) {
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (double g : p.grad())
      if (!std::isfinite(g)) return false;
  }
  return true;
}

double Adam::step() {
  if (!gradients_finite(params_)) throw NumericError("Adam: non-finite gradient");
  const double norm = gradient_norm(params_);
  double clip = 1.0;
  if (options_.max_grad_norm > 0.0 && norm > options_.max_grad_norm) clip = options_.max_grad_norm / norm;

  ++state_.steps;
  const double t = static_cast<double>(state_.steps);
  const double c1 = 1.0 - std::pow(options_.beta1, t);
  const double c2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    if (!p.has_grad()) continue;
    auto w = p.mutable_data();
    auto g = p.grad();
    auto& m = state_.first_moment[k];
    auto& v = state_.second_moment[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] * clip;
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * gi;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * gi * gi;
      w[i] -= options_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + options_.epsilon);
    }
  }
  return norm;
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::load_state(AdamState state) {
  if (state.first_moment.size() != params_.size() || state.second_moment.size() != params_.size()) {
    throw std::invalid_argument("Adam::load_state: parameter count mismatch");
  }
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (state.first_moment[k].size() != params_[k].size() || state.second_moment[k].size() != params_[k].size()) {
      throw std::invalid_argument("Adam::load_state: moment size mismatch at parameter " + std::to_string(k));
    }
  }
  state_ = std::move(state);
}

}  // namespace taac
