#include "taac/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace taac {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + s + "' (expected relu, tanh or identity)");
}

Tensor apply(Activation a, const Tensor& x) {
  switch (a) {
    case Activation::relu: return relu(x);
    case Activation::tanh: return tanh(x);
    case Activation::identity: return x;
  }
  return x;
}

std::vector<Tensor> tensors_of(const NamedParams& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& [name, t] : params) out.push_back(t);
  return out;
}

std::size_t parameter_count(const NamedParams& params) {
  std::size_t n = 0;
  for (const auto& [name, t] : params) n += t.size();
  return n;
}

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng, double gain) {
  const double a = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> w(fan_in * fan_out);
  for (double& x : w) x = rng.uniform(-a, a);
  return Tensor::parameter(fan_in, fan_out, std::move(w));
}

// ---- Mlp ------------------------------------------------------------------

Mlp::Mlp(const std::vector<std::size_t>& widths, Activation hidden, Activation last, Rng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i] == 0 || widths[i + 1] == 0) throw std::invalid_argument("Mlp: zero width layer");
    DenseLayer layer;
    layer.weight = xavier_uniform(widths[i], widths[i + 1], rng);
    layer.bias = Tensor::parameter(1, widths[i + 1], std::vector<double>(widths[i + 1], 0.0));
    layer.activation = i + 2 == widths.size() ? last : hidden;
    layers_.push_back(std::move(layer));
  }
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw std::invalid_argument("Mlp: no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.bias.rows() != 1 || l.bias.cols() != l.out()) {
      throw std::invalid_argument("Mlp: layer " + std::to_string(i) + " bias " + l.bias.shape().str() +
                                  " does not match weight " + l.weight.shape().str());
    }
    if (i > 0 && layers_[i - 1].out() != l.in()) {
      throw std::invalid_argument("Mlp: layer " + std::to_string(i) + " input width " +
                                  std::to_string(l.in()) + " does not chain with " +
                                  std::to_string(layers_[i - 1].out()));
    }
  }
}

Tensor Mlp::forward(const Tensor& x) const {
  if (x.cols() != in_width()) {
    throw std::invalid_argument("Mlp: input width " + std::to_string(x.cols()) + " but network expects " +
                                std::to_string(in_width()));
  }
  Tensor h = x;
  for (const auto& l : layers_) h = apply(l.activation, add_row(matmul(h, l.weight), l.bias));
  return h;
}

void Mlp::collect(const std::string& prefix, NamedParams& out) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    out.emplace_back(prefix + "/" + std::to_string(i) + "/weight", layers_[i].weight);
    out.emplace_back(prefix + "/" + std::to_string(i) + "/bias", layers_[i].bias);
  }
}

// ---- attention ------------------------------------------------------------

AttentionResult attention(const Tensor& m, const AttentionHead& head) {
  if (m.cols() != head.query.rows() || m.cols() != head.key.rows() || m.cols() != head.value.rows()) {
    throw std::invalid_argument("attention: input " + m.shape().str() + " does not match head matrices " +
                                head.query.shape().str() + "/" + head.key.shape().str() + "/" +
                                head.value.shape().str());
  }
  if (head.query.cols() != head.key.cols()) {
    throw std::invalid_argument("attention: query/key widths differ");
  }
  const double s = 1.0 / std::sqrt(static_cast<double>(head.key.cols()));
  Tensor q = matmul(m, head.query);
  Tensor k = matmul(m, head.key);
  Tensor v = matmul(m, head.value);
  Tensor w = softmax_rows(scale(matmul(q, transpose(k)), s));
  return {w, matmul(w, v)};
}

MultiHeadAttention::MultiHeadAttention(std::size_t d_model, std::size_t heads, Rng& rng) {
  if (heads == 0 || d_model % heads != 0) {
    throw std::invalid_argument("MultiHeadAttention: d_model " + std::to_string(d_model) +
                                " is not divisible by " + std::to_string(heads) + " heads");
  }
  const std::size_t d_head = d_model / heads;
  for (std::size_t h = 0; h < heads; ++h) {
    AttentionHead head;
    head.query = xavier_uniform(d_model, d_head, rng);
    head.key = xavier_uniform(d_model, d_head, rng);
    head.value = xavier_uniform(d_model, d_head, rng);
    heads_.push_back(std::move(head));
  }
}

MultiHeadAttention::MultiHeadAttention(std::vector<AttentionHead> heads) : heads_(std::move(heads)) {
  if (heads_.empty()) throw std::invalid_argument("MultiHeadAttention: no heads");
  const std::size_t d = heads_.front().query.rows();
  for (const auto& h : heads_) {
    if (h.query.rows() != d || h.key.rows() != d || h.value.rows() != d) {
      throw std::invalid_argument("MultiHeadAttention: heads disagree on d_model");
    }
    if (h.query.cols() != h.key.cols()) throw std::invalid_argument("MultiHeadAttention: d_q != d_k");
  }
}

std::size_t MultiHeadAttention::out_width() const {
  std::size_t w = 0;
  for (const auto& h : heads_) w += h.value.cols();
  return w;
}

MultiHeadAttention::Output MultiHeadAttention::forward(const Tensor& m, std::size_t group) const {
  if (m.cols() != d_model()) {
    throw std::invalid_argument("MultiHeadAttention: input width " + std::to_string(m.cols()) +
                                " but d_model is " + std::to_string(d_model()));
  }
  Output out;
  std::vector<Tensor> parts;
  for (const auto& h : heads_) {
    auto r = grouped_attention(matmul(m, h.query), matmul(m, h.key), matmul(m, h.value), group);
    parts.push_back(r.out);
    out.weights.push_back(r.weights);
  }
  out.concat = parts.size() == 1 ? parts.front() : concat_cols(parts);
  return out;
}

void MultiHeadAttention::collect(const std::string& prefix, NamedParams& out) const {
  for (std::size_t i = 0; i < heads_.size(); ++i) {
    const std::string p = prefix + "/" + std::to_string(i);
    out.emplace_back(p + "/query", heads_[i].query);
    out.emplace_back(p + "/key", heads_[i].key);
    out.emplace_back(p + "/value", heads_[i].value);
  }
}

}  // namespace taac
