#pragma once

// Network building blocks on top of the tensor tape: multilayer perceptrons
// and multi-head scaled dot-product attention.

#include <string>
#include <utility>
#include <vector>

#include "taac/rng.hpp"
#include "taac/tensor.hpp"

namespace taac {

enum class Activation { relu, tanh, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);
Tensor apply(Activation a, const Tensor& x);

// Named parameter tensors, in a stable order. Names are slash-separated paths
// such as "actor/embed/0/weight".
using NamedParams = std::vector<std::pair<std::string, Tensor>>;

std::vector<Tensor> tensors_of(const NamedParams& params);
std::size_t parameter_count(const NamedParams& params);

// Xavier-uniform weights, U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng, double gain = 1.0);

struct DenseLayer {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
  Activation activation = Activation::identity;

  std::size_t in() const { return weight.rows(); }
  std::size_t out() const { return weight.cols(); }
};

class Mlp {
 public:
  Mlp() = default;
  // widths = {in, h1, ..., out}; hidden layers use `hidden`, the last uses `last`.
  Mlp(const std::vector<std::size_t>& widths, Activation hidden, Activation last, Rng& rng);
  explicit Mlp(std::vector<DenseLayer> layers);

  Tensor forward(const Tensor& x) const;

  std::size_t in_width() const { return layers_.front().in(); }
  std::size_t out_width() const { return layers_.back().out(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  void collect(const std::string& prefix, NamedParams& out) const;

 private:
  std::vector<DenseLayer> layers_;
};

struct AttentionHead {
  Tensor query;  // d_model x d_k
  Tensor key;    // d_model x d_k
  Tensor value;  // d_model x d_v
};

// Single-sequence attention built from primitive ops:
//   weights = softmax(m Wq (m Wk)^T / sqrt(d_k)),  out = weights (m Wv)
struct AttentionResult {
  Tensor weights;
  Tensor out;
};
AttentionResult attention(const Tensor& m, const AttentionHead& head);

class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t d_model, std::size_t heads, Rng& rng);
  explicit MultiHeadAttention(std::vector<AttentionHead> heads);

  struct Output {
    Tensor concat;                 // rows x (heads * d_v)
    std::vector<Tensor> weights;   // per head, rows x group
  };
  // `m` stacks independent token groups of size `group` (one group per
  // timestep); tokens attend only within their group.
  Output forward(const Tensor& m, std::size_t group) const;

  std::size_t head_count() const { return heads_.size(); }
  std::size_t d_model() const { return heads_.front().query.rows(); }
  std::size_t out_width() const;
  const std::vector<AttentionHead>& heads() const { return heads_; }
  std::vector<AttentionHead>& heads() { return heads_; }
  void collect(const std::string& prefix, NamedParams& out) const;

 private:
  std::vector<AttentionHead> heads_;
};

}  // namespace taac
