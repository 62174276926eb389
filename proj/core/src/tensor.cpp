#include "taac/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace taac {

namespace {

thread_local bool g_grad_enabled = true;

using detail::Node;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.str() + " vs " + b.str());
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
}

void require_defined(const char* op, const Tensor& t) {
  if (!t.defined()) throw std::invalid_argument(std::string(op) + ": undefined tensor");
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

// Elementwise unary op with derivative expressed from input x and output y.
template <typename F, typename D>
Tensor unary(const Tensor& a, const char* op, F f, D dfdx) {
  require_defined(op, a);
  std::vector<double> out(a.size());
  auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_op_result(a.shape(), std::move(out), {a}, op, [dfdx](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * dfdx(p.value[i], self.value[i]);
  });
}

}  // namespace

std::string Shape::str() const {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

// ---- Tensor ---------------------------------------------------------------

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return filled(rows, cols, 0.0); }

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double v) {
  return from(rows, cols, std::vector<double>(rows * cols, v));
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> data) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("Tensor: dimensions must be positive");
  if (data.size() != rows * cols) {
    throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) +
                                " does not match shape " + Shape{rows, cols}.str());
  }
  auto n = std::make_shared<Node>();
  n->shape = {rows, cols};
  n->value = std::move(data);
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) { return from(1, 1, {v}); }

Tensor Tensor::parameter(std::size_t rows, std::size_t cols, std::vector<double> data) {
  Tensor t = from(rows, cols, std::move(data));
  t.node_->requires_grad = true;
  t.node_->ensure_grad();
  return t;
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item(): tensor " + shape().str() + " is not a scalar");
  return node_->value[0];
}

void Tensor::set_requires_grad(bool on) {
  if (!node_->is_leaf()) throw std::logic_error("set_requires_grad: only leaves can be toggled");
  node_->requires_grad = on;
  if (on) node_->ensure_grad();
}

void Tensor::zero_grad() {
  if (node_) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return from(rows(), cols(), node_->value); }

Tensor make_op_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                      const char* op, std::function<void(detail::Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->shape = shape;
  n->value = std::move(value);
  n->op = op;
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) needs = needs || p.requires_grad();
  }
  if (needs) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (const auto& p : parents) n->parents.push_back(p.node_ptr());
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(n));
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace {

// Post-order over nodes that require gradients; parents precede children.
std::vector<Node*> topological_order(Node* root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

void backward(const Tensor& loss) {
  require_defined("backward", loss);
  if (loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got " + loss.shape().str());
  }
  if (!loss.requires_grad()) {
    throw std::invalid_argument("backward: loss does not depend on any parameter");
  }
  auto order = topological_order(loss.node());
  for (Node* n : order) {
    if (!n->is_leaf()) n->grad.assign(n->value.size(), 0.0);
  }
  loss.node()->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (!(*it)->is_leaf()) (*it)->backward_fn(**it);
  }
}

std::size_t graph_size(const Tensor& root) {
  std::unordered_set<Node*> seen;
  std::vector<Node*> todo{root.node()};
  seen.insert(root.node());
  while (!todo.empty()) {
    Node* n = todo.back();
    todo.pop_back();
    for (auto& p : n->parents) {
      if (seen.insert(p.get()).second) todo.push_back(p.get());
    }
  }
  return seen.size();
}

// ---- ops ------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined("matmul", a);
  require_defined("matmul", b);
  if (a.cols() != b.rows()) shape_error("matmul", a.shape(), b.shape());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  auto A = a.data();
  auto B = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = B.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  return make_op_result({m, n}, std::move(out), {a, b}, "matmul", [m, k, n](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const auto& G = self.grad;
    if (pa.requires_grad) {
      auto& ga = pa.ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* grow = G.data() + i * n;
          const double* brow = pb.value.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = G.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = pa.value[i * k + p];
          if (aip == 0.0) continue;
          double* gbrow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_defined("transpose", a);
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  auto A = a.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = A[i * c + j];
  return make_op_result({c, r}, std::move(out), {a}, "transpose", [r, c](Node& self) {
    Node& p = parent(self, 0);
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j * r + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, "add", [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& p = parent(self, k);
      if (!p.requires_grad) continue;
      auto& g = p.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, "sub", [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& p = parent(self, k);
      if (!p.requires_grad) continue;
      const double sign = k == 0 ? 1.0 : -1.0;
      auto& g = p.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_op_result(a.shape(), std::move(out), {a, b}, "mul", [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor add_row(const Tensor& m, const Tensor& bias) {
  require_defined("add_row", m);
  require_defined("add_row", bias);
  if (bias.rows() != 1 || bias.cols() != m.cols()) shape_error("add_row", m.shape(), bias.shape());
  const std::size_t r = m.rows(), c = m.cols();
  std::vector<double> out(m.data().begin(), m.data().end());
  auto B = bias.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += B[j];
  return make_op_result(m.shape(), std::move(out), {m, bias}, "add_row", [r, c](Node& self) {
    Node& pm = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pm.requires_grad) {
      auto& g = pm.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, "scale", [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, "add_scalar", [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor square(const Tensor& a) {
  return unary(a, "square", [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor softmax_rows(const Tensor& m) {
  require_defined("softmax_rows", m);
  const std::size_t r = m.rows(), c = m.cols();
  std::vector<double> out(r * c);
  auto X = m.data();
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = X.data() + i * c;
    double* y = out.data() + i * c;
    const double mx = *std::max_element(x, x + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < c; ++j) y[j] /= z;
  }
  return make_op_result(m.shape(), std::move(out), {m}, "softmax_rows", [r, c](Node& self) {
    Node& p = parent(self, 0);
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      const double* y = self.value.data() + i * c;
      const double* dy = self.grad.data() + i * c;
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += dy[j] * y[j];
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += y[j] * (dy[j] - dot);
    }
  });
}

Tensor log_softmax_rows(const Tensor& m) {
  require_defined("log_softmax_rows", m);
  const std::size_t r = m.rows(), c = m.cols();
  std::vector<double> out(r * c);
  auto X = m.data();
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = X.data() + i * c;
    const double mx = *std::max_element(x, x + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(x[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = x[j] - lse;
  }
  return make_op_result(m.shape(), std::move(out), {m}, "log_softmax_rows", [r, c](Node& self) {
    Node& p = parent(self, 0);
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      const double* ly = self.value.data() + i * c;
      const double* dy = self.grad.data() + i * c;
      double total = 0.0;
      for (std::size_t j = 0; j < c; ++j) total += dy[j];
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += dy[j] - std::exp(ly[j]) * total;
    }
  });
}

Tensor gather_cols(const Tensor& m, std::span<const int> index) {
  require_defined("gather_cols", m);
  if (index.size() != m.rows()) {
    throw std::invalid_argument("gather_cols: " + std::to_string(index.size()) +
                                " indices for " + m.shape().str());
  }
  const std::size_t c = m.cols();
  std::vector<std::size_t> idx(index.size());
  std::vector<double> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || static_cast<std::size_t>(index[i]) >= c) {
      throw std::out_of_range("gather_cols: index " + std::to_string(index[i]) + " outside " +
                              m.shape().str());
    }
    idx[i] = static_cast<std::size_t>(index[i]);
    out[i] = m.data()[i * c + idx[i]];
  }
  return make_op_result({index.size(), 1}, std::move(out), {m}, "gather_cols",
                        [idx = std::move(idx), c](Node& self) {
                          auto& g = parent(self, 0).ensure_grad();
                          for (std::size_t i = 0; i < idx.size(); ++i) g[i * c + idx[i]] += self.grad[i];
                        });
}

Tensor select_rows(const Tensor& m, std::span<const std::size_t> index) {
  require_defined("select_rows", m);
  if (index.empty()) throw std::invalid_argument("select_rows: empty index");
  const std::size_t c = m.cols();
  std::vector<double> out(index.size() * c);
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= m.rows()) {
      throw std::out_of_range("select_rows: row " + std::to_string(index[k]) + " outside " +
                              m.shape().str());
    }
    std::copy_n(m.data().begin() + static_cast<std::ptrdiff_t>(index[k] * c), c, out.begin() + static_cast<std::ptrdiff_t>(k * c));
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return make_op_result({index.size(), c}, std::move(out), {m}, "select_rows",
                        [idx = std::move(idx), c](Node& self) {
                          auto& g = parent(self, 0).ensure_grad();
                          for (std::size_t k = 0; k < idx.size(); ++k)
                            for (std::size_t j = 0; j < c; ++j) g[idx[k] * c + j] += self.grad[k * c + j];
                        });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_defined("concat_cols", p);
    if (p.rows() != r) shape_error("concat_cols", parts[0].shape(), p.shape());
    offsets.push_back(total);
    total += p.cols();
  }
  std::vector<double> out(r * total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t c = parts[k].cols();
    auto src = parts[k].data();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(i * c), c, out.begin() + static_cast<std::ptrdiff_t>(i * total + offsets[k]));
  }
  return make_op_result({r, total}, std::move(out), parts, "concat_cols",
                        [r, total, offsets = std::move(offsets)](Node& self) {
                          for (std::size_t k = 0; k < self.parents.size(); ++k) {
                            Node& p = parent(self, k);
                            if (!p.requires_grad) continue;
                            const std::size_t c = p.shape.cols;
                            auto& g = p.ensure_grad();
                            for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < c; ++j)
                                g[i * c + j] += self.grad[i * total + offsets[k] + j];
                          }
                        });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t rows = 0;
  std::vector<double> out;
  for (const auto& p : parts) {
    require_defined("concat_rows", p);
    if (p.cols() != c) shape_error("concat_rows", parts[0].shape(), p.shape());
    rows += p.rows();
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return make_op_result({rows, c}, std::move(out), parts, "concat_rows", [](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node& p = parent(self, k);
      if (p.requires_grad) {
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offset + i];
      }
      offset += p.value.size();
    }
  });
}

Tensor slice_cols(const Tensor& m, std::size_t begin, std::size_t count) {
  require_defined("slice_cols", m);
  if (count == 0 || begin + count > m.cols()) {
    throw std::out_of_range("slice_cols: [" + std::to_string(begin) + ", " +
                            std::to_string(begin + count) + ") outside " + m.shape().str());
  }
  const std::size_t r = m.rows(), c = m.cols();
  std::vector<double> out(r * count);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < count; ++j) out[i * count + j] = m.data()[i * c + begin + j];
  return make_op_result({r, count}, std::move(out), {m}, "slice_cols", [r, c, begin, count](Node& self) {
    auto& g = parent(self, 0).ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < count; ++j) g[i * c + begin + j] += self.grad[i * count + j];
  });
}

Tensor reshape(const Tensor& m, std::size_t rows, std::size_t cols) {
  require_defined("reshape", m);
  if (rows * cols != m.size()) shape_error("reshape", m.shape(), Shape{rows, cols});
  std::vector<double> out(m.data().begin(), m.data().end());
  return make_op_result({rows, cols}, std::move(out), {m}, "reshape", [](Node& self) {
    auto& g = parent(self, 0).ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor sum(const Tensor& a) {
  require_defined("sum", a);
  double total = 0.0;
  for (double x : a.data()) total += x;
  return make_op_result({1, 1}, {total}, {a}, "sum", [](Node& self) {
    auto& g = parent(self, 0).ensure_grad();
    for (double& x : g) x += self.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor sum_rows(const Tensor& m) {
  require_defined("sum_rows", m);
  const std::size_t r = m.rows(), c = m.cols();
  std::vector<double> out(r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i] += m.data()[i * c + j];
  return make_op_result({r, 1}, std::move(out), {m}, "sum_rows", [r, c](Node& self) {
    auto& g = parent(self, 0).ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[i];
  });
}

Tensor mean_rows(const Tensor& m) { return scale(sum_rows(m), 1.0 / static_cast<double>(m.cols())); }

Tensor cosine_similarity_rows(const Tensor& a, const Tensor& b, double eps) {
  require_same_shape("cosine_similarity_rows", a, b);
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r);
  auto A = a.data();
  auto B = b.data();
  for (std::size_t i = 0; i < r; ++i) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      dot += A[i * c + j] * B[i * c + j];
      na += A[i * c + j] * A[i * c + j];
      nb += B[i * c + j] * B[i * c + j];
    }
    out[i] = dot / ((std::sqrt(na) + eps) * (std::sqrt(nb) + eps));
  }
  return make_op_result({r, 1}, std::move(out), {a, b}, "cosine_similarity_rows", [r, c, eps](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    for (std::size_t i = 0; i < r; ++i) {
      const double* x = pa.value.data() + i * c;
      const double* y = pb.value.data() + i * c;
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        dot += x[j] * y[j];
        na += x[j] * x[j];
        nb += y[j] * y[j];
      }
      na = std::sqrt(na);
      nb = std::sqrt(nb);
      const double denom = (na + eps) * (nb + eps);
      const double gi = self.grad[i];
      // d/dx [x.y / ((|x|+e)(|y|+e))] = y/denom - x.y/denom * x / (|x| (|x|+e))
      if (pa.requires_grad) {
        auto& g = pa.ensure_grad();
        const double radial = na > 0.0 ? dot / (denom * na * (na + eps)) : 0.0;
        for (std::size_t j = 0; j < c; ++j) g[i * c + j] += gi * (y[j] / denom - radial * x[j]);
      }
      if (pb.requires_grad) {
        auto& g = pb.ensure_grad();
        const double radial = nb > 0.0 ? dot / (denom * nb * (nb + eps)) : 0.0;
        for (std::size_t j = 0; j < c; ++j) g[i * c + j] += gi * (x[j] / denom - radial * y[j]);
      }
    }
  });
}

Tensor floor_at(const Tensor& a, double floor) {
  return unary(
      a, "floor_at", [floor](double x) { return x > floor ? x : floor; },
      [floor](double x, double) { return x > floor ? 1.0 : 0.0; });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  require_same_shape("minimum", a, b);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(a.data()[i], b.data()[i]);
  return make_op_result(a.shape(), std::move(out), {a, b}, "minimum", [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      const bool first = pa.value[i] < pb.value[i];
      Node& p = first ? pa : pb;
      if (p.requires_grad) p.ensure_grad()[i] += self.grad[i];
    }
  });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
  return unary(
      a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

GroupedAttention grouped_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                   std::size_t group) {
  require_same_shape("grouped_attention(q,k)", q, k);
  require_defined("grouped_attention", v);
  if (v.rows() != q.rows()) shape_error("grouped_attention(q,v)", q.shape(), v.shape());
  if (group == 0 || q.rows() % group != 0) {
    throw std::invalid_argument("grouped_attention: " + std::to_string(q.rows()) +
                                " rows do not split into groups of " + std::to_string(group));
  }
  const std::size_t rows = q.rows(), dk = q.cols(), dv = v.cols(), n = group;
  const double s = 1.0 / std::sqrt(static_cast<double>(dk));
  auto Q = q.data();
  auto K = k.data();
  auto V = v.data();
  auto weights = std::make_shared<std::vector<double>>(rows * n);
  std::vector<double> out(rows * dv, 0.0);
  auto& W = *weights;
  for (std::size_t g0 = 0; g0 < rows; g0 += n) {
    for (std::size_t i = 0; i < n; ++i) {
      double* w = W.data() + (g0 + i) * n;
      const double* qi = Q.data() + (g0 + i) * dk;
      for (std::size_t j = 0; j < n; ++j) {
        const double* kj = K.data() + (g0 + j) * dk;
        double dot = 0.0;
        for (std::size_t d = 0; d < dk; ++d) dot += qi[d] * kj[d];
        w[j] = dot * s;
      }
      const double mx = *std::max_element(w, w + n);
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) z += (w[j] = std::exp(w[j] - mx));
      for (std::size_t j = 0; j < n; ++j) w[j] /= z;
      double* o = out.data() + (g0 + i) * dv;
      for (std::size_t j = 0; j < n; ++j) {
        const double* vj = V.data() + (g0 + j) * dv;
        for (std::size_t d = 0; d < dv; ++d) o[d] += w[j] * vj[d];
      }
    }
  }
  Tensor out_t = make_op_result(
      {rows, dv}, std::move(out), {q, k, v}, "grouped_attention",
      [weights, rows, dk, dv, n, s](Node& self) {
        Node& pq = parent(self, 0);
        Node& pk = parent(self, 1);
        Node& pv = parent(self, 2);
        const auto& W = *weights;
        const auto& G = self.grad;
        std::vector<double> dW(n * n), dS(n * n);
        for (std::size_t g0 = 0; g0 < rows; g0 += n) {
          // dW = dOut V^T ; dV += W^T dOut
          for (std::size_t i = 0; i < n; ++i) {
            const double* gi = G.data() + (g0 + i) * dv;
            for (std::size_t j = 0; j < n; ++j) {
              const double* vj = pv.value.data() + (g0 + j) * dv;
              double acc = 0.0;
              for (std::size_t d = 0; d < dv; ++d) acc += gi[d] * vj[d];
              dW[i * n + j] = acc;
            }
          }
          if (pv.requires_grad) {
            auto& gv = pv.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
              const double* gi = G.data() + (g0 + i) * dv;
              for (std::size_t j = 0; j < n; ++j) {
                const double w = W[(g0 + i) * n + j];
                double* gvj = gv.data() + (g0 + j) * dv;
                for (std::size_t d = 0; d < dv; ++d) gvj[d] += w * gi[d];
              }
            }
          }
          for (std::size_t i = 0; i < n; ++i) {
            const double* w = W.data() + (g0 + i) * n;
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += dW[i * n + j] * w[j];
            for (std::size_t j = 0; j < n; ++j) dS[i * n + j] = w[j] * (dW[i * n + j] - dot) * s;
          }
          if (pq.requires_grad) {
            auto& gq = pq.ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
              for (std::size_t j = 0; j < n; ++j) {
                const double ds = dS[i * n + j];
                const double* kj = pk.value.data() + (g0 + j) * dk;
                double* gqi = gq.data() + (g0 + i) * dk;
                for (std::size_t d = 0; d < dk; ++d) gqi[d] += ds * kj[d];
              }
          }
          if (pk.requires_grad) {
            auto& gk = pk.ensure_grad();
            for (std::size_t i = 0; i < n; ++i)
              for (std::size_t j = 0; j < n; ++j) {
                const double ds = dS[i * n + j];
                const double* qi = pq.value.data() + (g0 + i) * dk;
                double* gkj = gk.data() + (g0 + j) * dk;
                for (std::size_t d = 0; d < dk; ++d) gkj[d] += ds * qi[d];
              }
          }
        }
      });
  return {out_t, Tensor::from(rows, n, *weights)};
}

}  // namespace taac
