#pragma once

// Dense row-major matrices with reverse-mode automatic differentiation.
//
// A Tensor is a cheap handle onto a shared graph node. Operations on tensors
// that require gradients record their parents and a backward closure; calling
// backward() on a scalar result walks the reachable nodes in reverse
// topological order and accumulates into every leaf's gradient buffer.
//
// All tensors are rank 2. Vectors are 1xN or Nx1 and scalars are 1x1.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace taac {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  const char* op = "leaf";

  bool is_leaf() const { return !backward_fn; }
  std::vector<double>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor filled(std::size_t rows, std::size_t cols, double v);
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> data);
  static Tensor scalar(double v);
  // Leaf with requires_grad set; what optimizers update.
  static Tensor parameter(std::size_t rows, std::size_t cols, std::vector<double> data);

  bool defined() const { return node_ != nullptr; }
  Shape shape() const { return node_->shape; }
  std::size_t rows() const { return node_->shape.rows; }
  std::size_t cols() const { return node_->shape.cols; }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  // Direct write access. Only meaningful on leaves; used by optimizers and loaders.
  std::span<double> mutable_data() { return node_->value; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  double item() const;

  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on);
  bool has_grad() const { return node_ && node_->grad.size() == node_->value.size(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad();

  // Copy of the values with no graph history.
  Tensor detach() const;
  const char* op_name() const { return node_->op; }

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& node_ptr() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  friend Tensor make_op_result(Shape, std::vector<double>, std::vector<Tensor>, const char*,
                               std::function<void(detail::Node&)>);

  std::shared_ptr<detail::Node> node_;
};

// Builds an op output. When gradient recording is active and any parent
// requires a gradient, the result keeps the parents and the backward closure.
Tensor make_op_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                      const char* op, std::function<void(detail::Node&)> backward_fn);

// Thread-local switch for graph recording.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Reverse pass from a 1x1 loss. Leaf gradients accumulate across calls;
// intermediate gradients are recomputed from scratch each call.
void backward(const Tensor& loss);

// Number of distinct nodes reachable from `root` (including it).
std::size_t graph_size(const Tensor& root);

// ---- operations -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// m (r x c) + bias (1 x c) broadcast over rows.
Tensor add_row(const Tensor& m, const Tensor& bias);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor square(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor softmax_rows(const Tensor& m);
Tensor log_softmax_rows(const Tensor& m);
// out[i] = m[i, index[i]], an r x 1 column.
Tensor gather_cols(const Tensor& m, std::span<const int> index);
// out row k = m row index[k].
Tensor select_rows(const Tensor& m, std::span<const std::size_t> index);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& m, std::size_t begin, std::size_t count);
Tensor reshape(const Tensor& m, std::size_t rows, std::size_t cols);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// r x c -> r x 1
Tensor sum_rows(const Tensor& m);
Tensor mean_rows(const Tensor& m);
// Row-wise cosine similarity of two r x c matrices; norms are guarded by eps.
Tensor cosine_similarity_rows(const Tensor& a, const Tensor& b, double eps);
// max(x, floor) elementwise.
Tensor floor_at(const Tensor& a, double floor);
// Elementwise min; on ties the gradient goes to b.
Tensor minimum(const Tensor& a, const Tensor& b);
// Gradient passes only strictly inside (lo, hi).
Tensor clamp(const Tensor& a, double lo, double hi);

// Scaled dot-product attention applied independently to consecutive row
// groups of size `group`: for each group g,
//   W_g = softmax(Q_g K_g^T / sqrt(d_k)),  out_g = W_g V_g.
// `weights` is (rows x group) and carries no gradient.
struct GroupedAttention {
  Tensor out;
  Tensor weights;
};
GroupedAttention grouped_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                   std::size_t group);

}  // namespace taac
