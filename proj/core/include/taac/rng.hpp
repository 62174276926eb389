#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace taac {

// Seeded generator used everywhere randomness appears. Distributions are
// hand-rolled on top of the raw 64-bit stream so results do not depend on
// the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n);
  // Index drawn from a probability vector (need not be exactly normalized).
  int categorical(std::span<const double> probs);

  // Engine state as text, for checkpoints.
  std::string state() const;
  void set_state(const std::string& text);

 private:
  std::mt19937_64 engine_;
};

// Deterministic seed derivation (splitmix64 over the pair).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace taac
