// core/src/tensor.cc

// Copyright 2026  ctxpre authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "ctxpre/tensor.h"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string_view>
#include <unordered_set>
#include <utility>

namespace ctxpre {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::string s = "{";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  s += "}";
  return s;
}

namespace {

void validate_shape(const Shape& shape) {
  require(!shape.empty(), "tensor shape must have at least one axis");
  for (int d : shape)
    require(d > 0, "tensor axes must be positive, got ", shape_to_string(shape));
}

// Rows/cols view of a 1-D or 2-D tensor; 1-D is one row.
std::pair<int, int> rows_cols(const Shape& shape) {
  if (shape.size() == 1) return {1, shape[0]};
  return {shape[0], shape[1]};
}

}  // namespace

template <typename T>
void check_finite(const char* op, std::span<const T> values) {
  for (const T& v : values) {
    if (!std::isfinite(v))
      throw NumericalError(std::string(op) + ": non-finite value encountered");
  }
}

template <typename T>
std::vector<T>& ensure_grad(TensorNode<T>& node) {
  if (node.grad.empty()) node.grad.assign(node.value.size(), T(0));
  return node.grad;
}

// ---- Tensor --------------------------------------------------------------

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape) {
  validate_shape(shape);
  auto node = std::make_shared<TensorNode<T>>();
  node->value.assign(shape_numel(shape), T(0));
  node->shape = std::move(shape);
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T fill) {
  validate_shape(shape);
  auto node = std::make_shared<TensorNode<T>>();
  node->value.assign(shape_numel(shape), fill);
  node->shape = std::move(shape);
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from_values(Shape shape, std::vector<T> values) {
  validate_shape(shape);
  require(static_cast<int64_t>(values.size()) == shape_numel(shape),
          "from_values: ", values.size(), " values for shape ",
          shape_to_string(shape));
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar_value(T v) {
  return from_values({1}, {v});
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  require(defined(), "tensor is empty");
  return node_->shape;
}

template <typename T>
int Tensor<T>::dim(int axis) const {
  const Shape& s = shape();
  require(axis >= 0 && axis < static_cast<int>(s.size()), "dim: bad axis ",
          axis, " for shape ", shape_to_string(s));
  return s[axis];
}

template <typename T>
int64_t Tensor<T>::numel() const {
  return shape_numel(shape());
}

template <typename T>
std::span<const T> Tensor<T>::value() const {
  require(defined(), "tensor is empty");
  return node_->value;
}

template <typename T>
T Tensor<T>::at(int64_t i) const {
  require(i >= 0 && i < numel(), "at: index ", i, " out of range");
  return node_->value[i];
}

template <typename T>
T Tensor<T>::at(int64_t row, int64_t col) const {
  require(rank() == 2, "at(row, col) requires a 2-D tensor");
  require(row >= 0 && row < dim(0) && col >= 0 && col < dim(1),
          "at: index (", row, ", ", col, ") out of range for ",
          shape_to_string(shape()));
  return node_->value[row * dim(1) + col];
}

template <typename T>
T Tensor<T>::scalar() const {
  require(numel() == 1, "scalar: tensor has ", numel(), " elements");
  return node_->value[0];
}

template <typename T>
bool Tensor<T>::requires_grad() const {
  require(defined(), "tensor is empty");
  return node_->requires_grad;
}

namespace {

bool is_leaf_node(const char* op) {
  return op != nullptr && std::string_view(op) == "leaf";
}

}  // namespace

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool value) {
  require(defined(), "tensor is empty");
  require(is_leaf_node(node_->op), "set_requires_grad: only valid on leaves");
  node_->requires_grad = value;
  return *this;
}

template <typename T>
const std::vector<T>& Tensor<T>::grad() const {
  require(defined(), "tensor is empty");
  return node_->grad;
}

template <typename T>
std::vector<T> Tensor<T>::grad_or_zeros() const {
  require(defined(), "tensor is empty");
  if (node_->grad.empty()) return std::vector<T>(node_->value.size(), T(0));
  return node_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  require(defined(), "tensor is empty");
  node_->grad.clear();
}

template <typename T>
void Tensor<T>::seed_grad(std::span<const T> g) {
  require(defined(), "tensor is empty");
  require(static_cast<int64_t>(g.size()) == numel(),
          "seed_grad: size mismatch");
  ensure_grad(*node_);
  for (size_t i = 0; i < g.size(); ++i) node_->grad[i] += g[i];
}

template <typename T>
void Tensor<T>::overwrite_values(std::span<const T> values) {
  require(defined(), "tensor is empty");
  require(is_leaf_node(node_->op), "overwrite_values: only valid on leaves");
  require(static_cast<int64_t>(values.size()) == numel(),
          "overwrite_values: size mismatch");
  std::copy(values.begin(), values.end(), node_->value.begin());
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  require(defined(), "tensor is empty");
  return from_values(node_->shape, node_->value);
}

template <typename T>
Tensor<T> randn_tensor(Shape shape, Rng& rng, double stddev) {
  validate_shape(shape);
  std::vector<T> values(shape_numel(shape));
  rng.fill_normal<T>(values, stddev);
  return Tensor<T>::from_values(std::move(shape), std::move(values));
}

// ---- Graph construction ----------------------------------------------------

template <typename T>
Tensor<T> make_op(const char* op, Shape shape, std::vector<T> value,
                  std::vector<Tensor<T>> inputs,
                  std::function<void(TensorNode<T>&)> backward_fn) {
  validate_shape(shape);
  require(static_cast<int64_t>(value.size()) == shape_numel(shape), op,
          ": value size does not match shape");
  for (const auto& in : inputs) check_finite(op, in.value());
  check_finite(op, std::span<const T>(value));
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in.requires_grad();
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor<T>(std::move(node));
}

// ---- Backward --------------------------------------------------------------

namespace {

template <typename T>
void topo_order(const std::vector<Tensor<T>>& roots,
                std::vector<TensorNode<T>*>* order) {
  std::unordered_set<TensorNode<T>*> discovered;
  std::vector<std::pair<TensorNode<T>*, size_t>> stack;
  for (const auto& root : roots) {
    TensorNode<T>* r = root.node().get();
    if (r == nullptr || discovered.count(r)) continue;
    discovered.insert(r);
    stack.emplace_back(r, 0);
    while (!stack.empty()) {
      auto& top = stack.back();
      TensorNode<T>* n = top.first;
      if (top.second < n->inputs.size()) {
        TensorNode<T>* child = n->inputs[top.second++].get();
        if (!discovered.count(child)) {
          discovered.insert(child);
          stack.emplace_back(child, 0);
        }
      } else {
        order->push_back(n);
        stack.pop_back();
      }
    }
  }
}

}  // namespace

template <typename T>
void backward_seeded(const std::vector<Tensor<T>>& roots) {
  std::vector<TensorNode<T>*> order;
  topo_order(roots, &order);
  // Reverse topological order: a node's closure runs after every consumer has
  // deposited its gradient contribution.
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode<T>* n = *it;
    if (n->backward_fn && !n->grad.empty()) {
      n->backward_fn(*n);
      // Interior gradients are no longer needed once propagated.
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }
}

template <typename T>
void backward(const Tensor<T>& loss) {
  require(loss.defined(), "backward: empty tensor");
  require(loss.numel() == 1, "backward: loss must be scalar, got shape ",
          shape_to_string(loss.shape()));
  ensure_grad(*loss.node());
  loss.node()->grad[0] += T(1);
  backward_seeded<T>({loss});
}

template <typename T>
void run_backward_step(const Tensor<T>& out) {
  require(out.defined(), "run_backward_step: empty tensor");
  TensorNode<T>& n = *out.node();
  require(!n.grad.empty(), "run_backward_step: grad not seeded");
  if (n.backward_fn) n.backward_fn(n);
}

// ---- BLAS bridge -----------------------------------------------------------

template <>
void gemm<float>(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
                 const float* a, int lda, const float* b, int ldb, float beta,
                 float* c, int ldc) {
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b,
              ldb, beta, c, ldc);
}

template <>
void gemm<double>(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
                  const double* a, int lda, const double* b, int ldb,
                  double beta, double* c, int ldc) {
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b,
              ldb, beta, c, ldc);
}

// ---- Elementwise operations ------------------------------------------------

namespace {

template <typename T>
void require_same_shape(const char* op, const Tensor<T>& a,
                        const Tensor<T>& b) {
  require(a.shape() == b.shape(), op, ": shape mismatch ",
          shape_to_string(a.shape()), " vs ", shape_to_string(b.shape()));
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("add", a, b);
  std::vector<T> out(a.value().begin(), a.value().end());
  for (int64_t i = 0; i < a.numel(); ++i) out[i] += b.value()[i];
  return make_op<T>("add", a.shape(), std::move(out), {a, b},
                    [](TensorNode<T>& n) {
                      for (int j = 0; j < 2; ++j) {
                        auto& in = *n.inputs[j];
                        if (!in.requires_grad) continue;
                        auto& g = ensure_grad(in);
                        for (size_t i = 0; i < g.size(); ++i)
                          g[i] += n.grad[i];
                      }
                    });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("sub", a, b);
  std::vector<T> out(a.value().begin(), a.value().end());
  for (int64_t i = 0; i < a.numel(); ++i) out[i] -= b.value()[i];
  return make_op<T>("sub", a.shape(), std::move(out), {a, b},
                    [](TensorNode<T>& n) {
                      if (n.inputs[0]->requires_grad) {
                        auto& g = ensure_grad(*n.inputs[0]);
                        for (size_t i = 0; i < g.size(); ++i)
                          g[i] += n.grad[i];
                      }
                      if (n.inputs[1]->requires_grad) {
                        auto& g = ensure_grad(*n.inputs[1]);
                        for (size_t i = 0; i < g.size(); ++i)
                          g[i] -= n.grad[i];
                      }
                    });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape("mul", a, b);
  std::vector<T> out(a.numel());
  for (int64_t i = 0; i < a.numel(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_op<T>("mul", a.shape(), std::move(out), {a, b},
                    [](TensorNode<T>& n) {
                      auto& a_node = *n.inputs[0];
                      auto& b_node = *n.inputs[1];
                      if (a_node.requires_grad) {
                        auto& g = ensure_grad(a_node);
                        for (size_t i = 0; i < g.size(); ++i)
                          g[i] += n.grad[i] * b_node.value[i];
                      }
                      if (b_node.requires_grad) {
                        auto& g = ensure_grad(b_node);
                        for (size_t i = 0; i < g.size(); ++i)
                          g[i] += n.grad[i] * a_node.value[i];
                      }
                    });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  require(std::isfinite(c), "scale: non-finite factor");
  std::vector<T> out(a.value().begin(), a.value().end());
  for (auto& v : out) v *= c;
  return make_op<T>("scale", a.shape(), std::move(out), {a},
                    [c](TensorNode<T>& n) {
                      if (!n.inputs[0]->requires_grad) return;
                      auto& g = ensure_grad(*n.inputs[0]);
                      for (size_t i = 0; i < g.size(); ++i)
                        g[i] += c * n.grad[i];
                    });
}

template <typename T>
Tensor<T> add_rowwise(const Tensor<T>& x, const Tensor<T>& bias) {
  require(x.rank() == 2, "add_rowwise: x must be 2-D");
  require(bias.rank() == 1 && bias.dim(0) == x.dim(1),
          "add_rowwise: bias shape ", shape_to_string(bias.shape()),
          " does not match x ", shape_to_string(x.shape()));
  const int rows = x.dim(0), cols = x.dim(1);
  std::vector<T> out(x.value().begin(), x.value().end());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out[r * cols + c] += bias.value()[c];
  return make_op<T>(
      "add_rowwise", x.shape(), std::move(out), {x, bias},
      [rows, cols](TensorNode<T>& n) {
        if (n.inputs[0]->requires_grad) {
          auto& g = ensure_grad(*n.inputs[0]);
          for (size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (n.inputs[1]->requires_grad) {
          auto& g = ensure_grad(*n.inputs[1]);
          for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c) g[c] += n.grad[r * cols + c];
        }
      });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  for (int64_t i = 0; i < x.numel(); ++i)
    out[i] = x.value()[i] > T(0) ? x.value()[i] : T(0);
  return make_op<T>("relu", x.shape(), std::move(out), {x},
                    [](TensorNode<T>& n) {
                      auto& in = *n.inputs[0];
                      if (!in.requires_grad) return;
                      auto& g = ensure_grad(in);
                      for (size_t i = 0; i < g.size(); ++i)
                        if (in.value[i] > T(0)) g[i] += n.grad[i];
                    });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  static const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  static const T inv_sqrt2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
  std::vector<T> out(x.numel());
  for (int64_t i = 0; i < x.numel(); ++i) {
    const T v = x.value()[i];
    out[i] = T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2));
  }
  return make_op<T>(
      "gelu", x.shape(), std::move(out), {x}, [](TensorNode<T>& n) {
        auto& in = *n.inputs[0];
        if (!in.requires_grad) return;
        auto& g = ensure_grad(in);
        for (size_t i = 0; i < g.size(); ++i) {
          const T v = in.value[i];
          const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
          const T pdf = std::exp(T(-0.5) * v * v) * inv_sqrt2pi;
          g[i] += n.grad[i] * (cdf + v * pdf);
        }
      });
}

template <typename T>
Tensor<T> exp_of(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  for (int64_t i = 0; i < x.numel(); ++i) out[i] = std::exp(x.value()[i]);
  return make_op<T>("exp", x.shape(), std::move(out), {x},
                    [](TensorNode<T>& n) {
                      auto& in = *n.inputs[0];
                      if (!in.requires_grad) return;
                      auto& g = ensure_grad(in);
                      for (size_t i = 0; i < g.size(); ++i)
                        g[i] += n.grad[i] * n.value[i];
                    });
}

template <typename T>
Tensor<T> log_of(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  for (int64_t i = 0; i < x.numel(); ++i) {
    require_numeric(x.value()[i] > T(0), "log: non-positive input");
    out[i] = std::log(x.value()[i]);
  }
  return make_op<T>("log", x.shape(), std::move(out), {x},
                    [](TensorNode<T>& n) {
                      auto& in = *n.inputs[0];
                      if (!in.requires_grad) return;
                      auto& g = ensure_grad(in);
                      for (size_t i = 0; i < g.size(); ++i)
                        g[i] += n.grad[i] / in.value[i];
                    });
}

// ---- Linear algebra ----------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.rank() == 2 && b.rank() == 2, "matmul: both inputs must be 2-D");
  require(a.dim(1) == b.dim(0), "matmul: inner dimensions differ, ",
          shape_to_string(a.shape()), " x ", shape_to_string(b.shape()));
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<T> out(static_cast<size_t>(m) * n, T(0));
  check_finite("matmul", a.value());
  check_finite("matmul", b.value());
  gemm<T>(false, false, m, n, k, T(1), a.value().data(), k, b.value().data(),
          n, T(0), out.data(), n);
  return make_op<T>(
      "matmul", {m, n}, std::move(out), {a, b}, [m, k, n](TensorNode<T>& n_) {
        auto& a_node = *n_.inputs[0];
        auto& b_node = *n_.inputs[1];
        if (a_node.requires_grad) {
          auto& g = ensure_grad(a_node);
          // dA = dC * B^T
          gemm<T>(false, true, m, k, n, T(1), n_.grad.data(), n,
                  b_node.value.data(), n, T(1), g.data(), k);
        }
        if (b_node.requires_grad) {
          auto& g = ensure_grad(b_node);
          // dB = A^T * dC
          gemm<T>(true, false, k, n, m, T(1), a_node.value.data(), k,
                  n_.grad.data(), n, T(1), g.data(), n);
        }
      });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require(x.rank() == 2, "transpose: input must be 2-D");
  const int m = x.dim(0), n = x.dim(1);
  std::vector<T> out(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<size_t>(j) * m + i] = x.value()[static_cast<size_t>(i) * n + j];
  return make_op<T>("transpose", {n, m}, std::move(out), {x},
                    [m, n](TensorNode<T>& node) {
                      auto& in = *node.inputs[0];
                      if (!in.requires_grad) return;
                      auto& g = ensure_grad(in);
                      for (int j = 0; j < n; ++j)
                        for (int i = 0; i < m; ++i)
                          g[static_cast<size_t>(i) * n + j] +=
                              node.grad[static_cast<size_t>(j) * m + i];
                    });
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 int stride, int left_pad) {
  require(x.rank() == 2, "conv1d: x must be {t, c_in}");
  require(w.rank() == 3, "conv1d: w must be {k, c_in, c_out}");
  const int t_in = x.dim(0), c_in = x.dim(1);
  const int k = w.dim(0), c_out = w.dim(2);
  require(w.dim(1) == c_in, "conv1d: weight c_in ", w.dim(1),
          " does not match input channels ", c_in);
  require(stride >= 1, "conv1d: stride must be >= 1");
  require(left_pad >= 0 && left_pad < k, "conv1d: left_pad must be in [0, k)");
  const bool has_bias = bias.defined();
  if (has_bias)
    require(bias.rank() == 1 && bias.dim(0) == c_out,
            "conv1d: bias must have shape {c_out}");
  const int t_out = (t_in + left_pad - k) / stride + 1;
  require(t_in + left_pad >= k, "conv1d: input of ", t_in,
          " frames too short for kernel ", k, " with pad ", left_pad);

  check_finite("conv1d", x.value());
  check_finite("conv1d", w.value());

  std::vector<T> out(static_cast<size_t>(t_out) * c_out, T(0));
  if (has_bias) {
    check_finite("conv1d", bias.value());
    for (int t = 0; t < t_out; ++t)
      for (int c = 0; c < c_out; ++c) out[static_cast<size_t>(t) * c_out + c] = bias.value()[c];
  }

  // Row range of output frames for which input row r = t*stride + tap - pad
  // stays inside [0, t_in).
  auto tap_range = [stride, left_pad, t_in, t_out](int tap) {
    int t0 = 0;
    if (left_pad > tap) t0 = (left_pad - tap + stride - 1) / stride;
    int t1 = (t_in - 1 + left_pad - tap) / stride;
    if (t1 > t_out - 1) t1 = t_out - 1;
    return std::pair<int, int>(t0, t1);
  };

  for (int tap = 0; tap < k; ++tap) {
    auto [t0, t1] = tap_range(tap);
    if (t0 > t1) continue;
    const int rows = t1 - t0 + 1;
    const int r0 = t0 * stride + tap - left_pad;
    gemm<T>(false, false, rows, c_out, c_in, T(1),
            x.value().data() + static_cast<size_t>(r0) * c_in, stride * c_in,
            w.value().data() + static_cast<size_t>(tap) * c_in * c_out, c_out,
            T(1), out.data() + static_cast<size_t>(t0) * c_out, c_out);
  }

  std::vector<Tensor<T>> inputs = {x, w};
  if (has_bias) inputs.push_back(bias);
  return make_op<T>(
      "conv1d", {t_out, c_out}, std::move(out), std::move(inputs),
      [stride, left_pad, t_in, c_in, k, c_out, t_out,
       tap_range, has_bias](TensorNode<T>& node) {
        auto& x_node = *node.inputs[0];
        auto& w_node = *node.inputs[1];
        if (x_node.requires_grad) {
          auto& gx = ensure_grad(x_node);
          for (int tap = 0; tap < k; ++tap) {
            auto [t0, t1] = tap_range(tap);
            if (t0 > t1) continue;
            const int rows = t1 - t0 + 1;
            const int r0 = t0 * stride + tap - left_pad;
            // dX[r0::stride] += dY[t0:t1+1] * W_tap^T
            gemm<T>(false, true, rows, c_in, c_out, T(1),
                    node.grad.data() + static_cast<size_t>(t0) * c_out, c_out,
                    w_node.value.data() + static_cast<size_t>(tap) * c_in * c_out,
                    c_out, T(1), gx.data() + static_cast<size_t>(r0) * c_in,
                    stride * c_in);
          }
        }
        if (w_node.requires_grad) {
          auto& gw = ensure_grad(w_node);
          for (int tap = 0; tap < k; ++tap) {
            auto [t0, t1] = tap_range(tap);
            if (t0 > t1) continue;
            const int rows = t1 - t0 + 1;
            const int r0 = t0 * stride + tap - left_pad;
            // dW_tap += X[r0::stride]^T * dY[t0:t1+1]
            gemm<T>(true, false, c_in, c_out, rows, T(1),
                    x_node.value.data() + static_cast<size_t>(r0) * c_in,
                    stride * c_in,
                    node.grad.data() + static_cast<size_t>(t0) * c_out, c_out,
                    T(1), gw.data() + static_cast<size_t>(tap) * c_in * c_out,
                    c_out);
          }
        }
        if (has_bias && node.inputs[2]->requires_grad) {
          auto& gb = ensure_grad(*node.inputs[2]);
          for (int t = 0; t < t_out; ++t)
            for (int c = 0; c < c_out; ++c)
              gb[c] += node.grad[static_cast<size_t>(t) * c_out + c];
        }
        (void)t_in;
      });
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, int stride,
                 int left_pad) {
  return conv1d(x, w, Tensor<T>(), stride, left_pad);
}

// ---- Softmax family ----------------------------------------------------------

namespace {

// Shared softmax forward over one row segment.
template <typename T>
void softmax_row(const T* x, const uint8_t* mask, int n, T* out) {
  T m = -std::numeric_limits<T>::infinity();
  for (int i = 0; i < n; ++i)
    if (!mask || mask[i]) m = std::max(m, x[i]);
  T z = T(0);
  for (int i = 0; i < n; ++i) {
    if (mask && !mask[i]) {
      out[i] = T(0);
    } else {
      out[i] = std::exp(x[i] - m);
      z += out[i];
    }
  }
  for (int i = 0; i < n; ++i) out[i] /= z;
}

// dx_j = p_j * (dy_j - sum_i dy_i p_i); masked entries have p = 0.
template <typename T>
void softmax_row_backward(const T* p, const T* dy, int n, T* dx) {
  T s = T(0);
  for (int i = 0; i < n; ++i) s += dy[i] * p[i];
  for (int i = 0; i < n; ++i) dx[i] += p[i] * (dy[i] - s);
}

}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
  require(x.rank() <= 2, "softmax: input must be 1-D or 2-D");
  require(axis >= 0 && axis < x.rank(), "softmax: bad axis ", axis);
  check_finite("softmax", x.value());
  auto [rows, cols] = rows_cols(x.shape());
  const bool row_wise = (x.rank() == 1) || (axis == 1);
  std::vector<T> out(x.numel());
  if (row_wise) {
    for (int r = 0; r < rows; ++r)
      softmax_row<T>(x.value().data() + static_cast<size_t>(r) * cols, nullptr,
                     cols, out.data() + static_cast<size_t>(r) * cols);
  } else {
    std::vector<T> col(rows), res(rows);
    for (int c = 0; c < cols; ++c) {
      for (int r = 0; r < rows; ++r) col[r] = x.value()[static_cast<size_t>(r) * cols + c];
      softmax_row<T>(col.data(), nullptr, rows, res.data());
      for (int r = 0; r < rows; ++r) out[static_cast<size_t>(r) * cols + c] = res[r];
    }
  }
  return make_op<T>(
      "softmax", x.shape(), std::move(out), {x},
      [rows_ = rows, cols_ = cols, row_wise](TensorNode<T>& node) {
        auto& in = *node.inputs[0];
        if (!in.requires_grad) return;
        auto& g = ensure_grad(in);
        if (row_wise) {
          for (int r = 0; r < rows_; ++r)
            softmax_row_backward<T>(
                node.value.data() + static_cast<size_t>(r) * cols_,
                node.grad.data() + static_cast<size_t>(r) * cols_, cols_,
                g.data() + static_cast<size_t>(r) * cols_);
        } else {
          std::vector<T> p(rows_), dy(rows_), dx(rows_);
          for (int c = 0; c < cols_; ++c) {
            for (int r = 0; r < rows_; ++r) {
              p[r] = node.value[static_cast<size_t>(r) * cols_ + c];
              dy[r] = node.grad[static_cast<size_t>(r) * cols_ + c];
              dx[r] = T(0);
            }
            softmax_row_backward<T>(p.data(), dy.data(), rows_, dx.data());
            for (int r = 0; r < rows_; ++r) g[static_cast<size_t>(r) * cols_ + c] += dx[r];
          }
        }
      });
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x, int axis) {
  require(x.rank() <= 2, "log_softmax: input must be 1-D or 2-D");
  require(axis >= 0 && axis < x.rank(), "log_softmax: bad axis ", axis);
  check_finite("log_softmax", x.value());
  auto [rows, cols] = rows_cols(x.shape());
  const bool row_wise = (x.rank() == 1) || (axis == 1);
  // Work in row-major row views; for axis 0 operate on the transpose layout.
  auto compute_row = [](const T* xr, int n, T* out) {
    T m = xr[0];
    for (int i = 1; i < n; ++i) m = std::max(m, xr[i]);
    T z = T(0);
    for (int i = 0; i < n; ++i) z += std::exp(xr[i] - m);
    const T lse = m + std::log(z);
    for (int i = 0; i < n; ++i) out[i] = xr[i] - lse;
  };
  std::vector<T> out(x.numel());
  if (row_wise) {
    for (int r = 0; r < rows; ++r)
      compute_row(x.value().data() + static_cast<size_t>(r) * cols, cols,
                  out.data() + static_cast<size_t>(r) * cols);
  } else {
    std::vector<T> col(rows), res(rows);
    for (int c = 0; c < cols; ++c) {
      for (int r = 0; r < rows; ++r) col[r] = x.value()[static_cast<size_t>(r) * cols + c];
      compute_row(col.data(), rows, res.data());
      for (int r = 0; r < rows; ++r) out[static_cast<size_t>(r) * cols + c] = res[r];
    }
  }
  return make_op<T>(
      "log_softmax", x.shape(), std::move(out), {x},
      [rows_ = rows, cols_ = cols, row_wise](TensorNode<T>& node) {
        auto& in = *node.inputs[0];
        if (!in.requires_grad) return;
        auto& g = ensure_grad(in);
        // dx_j = dy_j - softmax_j * sum_i dy_i
        auto backward_row = [](const T* y, const T* dy, int n, T* dx) {
          T s = T(0);
          for (int i = 0; i < n; ++i) s += dy[i];
          for (int i = 0; i < n; ++i) dx[i] += dy[i] - std::exp(y[i]) * s;
        };
        if (row_wise) {
          for (int r = 0; r < rows_; ++r)
            backward_row(node.value.data() + static_cast<size_t>(r) * cols_,
                         node.grad.data() + static_cast<size_t>(r) * cols_,
                         cols_, g.data() + static_cast<size_t>(r) * cols_);
        } else {
          std::vector<T> y(rows_), dy(rows_), dx(rows_);
          for (int c = 0; c < cols_; ++c) {
            for (int r = 0; r < rows_; ++r) {
              y[r] = node.value[static_cast<size_t>(r) * cols_ + c];
              dy[r] = node.grad[static_cast<size_t>(r) * cols_ + c];
              dx[r] = T(0);
            }
            backward_row(y.data(), dy.data(), rows_, dx.data());
            for (int r = 0; r < rows_; ++r) g[static_cast<size_t>(r) * cols_ + c] += dx[r];
          }
        }
      });
}

template <typename T>
Tensor<T> masked_softmax(const Tensor<T>& x,
                         const std::vector<uint8_t>& mask) {
  require(x.rank() == 2, "masked_softmax: input must be 2-D");
  require(static_cast<int64_t>(mask.size()) == x.numel(),
          "masked_softmax: mask size ", mask.size(), " does not match ",
          shape_to_string(x.shape()));
  check_finite("masked_softmax", x.value());
  const int rows = x.dim(0), cols = x.dim(1);
  for (int r = 0; r < rows; ++r) {
    bool any = false;
    for (int c = 0; c < cols; ++c) any = any || mask[static_cast<size_t>(r) * cols + c];
    require(any, "masked_softmax: row ", r, " has no unmasked entries");
  }
  std::vector<T> out(x.numel());
  for (int r = 0; r < rows; ++r)
    softmax_row<T>(x.value().data() + static_cast<size_t>(r) * cols,
                   mask.data() + static_cast<size_t>(r) * cols, cols,
                   out.data() + static_cast<size_t>(r) * cols);
  return make_op<T>(
      "masked_softmax", x.shape(), std::move(out), {x},
      [rows, cols](TensorNode<T>& node) {
        auto& in = *node.inputs[0];
        if (!in.requires_grad) return;
        auto& g = ensure_grad(in);
        for (int r = 0; r < rows; ++r)
          softmax_row_backward<T>(
              node.value.data() + static_cast<size_t>(r) * cols,
              node.grad.data() + static_cast<size_t>(r) * cols, cols,
              g.data() + static_cast<size_t>(r) * cols);
      });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain,
                     const Tensor<T>& bias, T eps) {
  require(x.rank() == 2, "layer_norm: x must be 2-D");
  const int rows = x.dim(0), cols = x.dim(1);
  require(gain.rank() == 1 && gain.dim(0) == cols,
          "layer_norm: gain must have shape {", cols, "}");
  require(bias.rank() == 1 && bias.dim(0) == cols,
          "layer_norm: bias must have shape {", cols, "}");
  require(eps > T(0), "layer_norm: eps must be positive");
  check_finite("layer_norm", x.value());
  std::vector<T> out(x.numel());
  auto inv_std = std::make_shared<std::vector<T>>(rows);
  auto means = std::make_shared<std::vector<T>>(rows);
  for (int r = 0; r < rows; ++r) {
    const T* xr = x.value().data() + static_cast<size_t>(r) * cols;
    T m = T(0);
    for (int c = 0; c < cols; ++c) m += xr[c];
    m /= T(cols);
    T var = T(0);
    for (int c = 0; c < cols; ++c) var += (xr[c] - m) * (xr[c] - m);
    var /= T(cols);
    const T inv = T(1) / std::sqrt(var + eps);
    (*means)[r] = m;
    (*inv_std)[r] = inv;
    T* yr = out.data() + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c)
      yr[c] = gain.value()[c] * (xr[c] - m) * inv + bias.value()[c];
  }
  return make_op<T>(
      "layer_norm", x.shape(), std::move(out), {x, gain, bias},
      [rows, cols, means, inv_std](TensorNode<T>& node) {
        auto& x_node = *node.inputs[0];
        auto& g_node = *node.inputs[1];
        auto& b_node = *node.inputs[2];
        std::vector<T> xhat(cols);
        for (int r = 0; r < rows; ++r) {
          const T* xr = x_node.value.data() + static_cast<size_t>(r) * cols;
          const T* dyr = node.grad.data() + static_cast<size_t>(r) * cols;
          const T m = (*means)[r], inv = (*inv_std)[r];
          for (int c = 0; c < cols; ++c) xhat[c] = (xr[c] - m) * inv;
          if (g_node.requires_grad) {
            auto& gg = ensure_grad(g_node);
            for (int c = 0; c < cols; ++c) gg[c] += dyr[c] * xhat[c];
          }
          if (b_node.requires_grad) {
            auto& gb = ensure_grad(b_node);
            for (int c = 0; c < cols; ++c) gb[c] += dyr[c];
          }
          if (x_node.requires_grad) {
            auto& gx = ensure_grad(x_node);
            T m1 = T(0), m2 = T(0);
            for (int c = 0; c < cols; ++c) {
              const T dxhat = dyr[c] * g_node.value[c];
              m1 += dxhat;
              m2 += dxhat * xhat[c];
            }
            m1 /= T(cols);
            m2 /= T(cols);
            T* gxr = gx.data() + static_cast<size_t>(r) * cols;
            for (int c = 0; c < cols; ++c) {
              const T dxhat = dyr[c] * g_node.value[c];
              gxr[c] += inv * (dxhat - m1 - xhat[c] * m2);
            }
          }
        }
      });
}

// ---- Reductions and reshaping -----------------------------------------------

template <typename T>
Tensor<T> dot(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.rank() == 1 && b.rank() == 1 && a.dim(0) == b.dim(0),
          "dot: inputs must be equal-length 1-D tensors");
  T s = T(0);
  for (int64_t i = 0; i < a.numel(); ++i) s += a.value()[i] * b.value()[i];
  return make_op<T>("dot", {1}, {s}, {a, b}, [](TensorNode<T>& n) {
    const T g0 = n.grad[0];
    auto& a_node = *n.inputs[0];
    auto& b_node = *n.inputs[1];
    if (a_node.requires_grad) {
      auto& g = ensure_grad(a_node);
      for (size_t i = 0; i < g.size(); ++i) g[i] += g0 * b_node.value[i];
    }
    if (b_node.requires_grad) {
      auto& g = ensure_grad(b_node);
      for (size_t i = 0; i < g.size(); ++i) g[i] += g0 * a_node.value[i];
    }
  });
}

template <typename T>
Tensor<T> slice(const Tensor<T>& x, int axis, int begin, int end) {
  require(x.rank() >= 1 && x.rank() <= 2, "slice: input must be 1-D or 2-D");
  require(axis >= 0 && axis < x.rank(), "slice: bad axis ", axis);
  require(begin >= 0 && begin < end && end <= x.dim(axis),
          "slice: bad range [", begin, ", ", end, ") for axis of size ",
          x.dim(axis));
  if (x.rank() == 1 || axis == 0) {
    const int cols = x.rank() == 2 ? x.dim(1) : 1;
    const int len = end - begin;
    std::vector<T> out(x.value().begin() + static_cast<size_t>(begin) * cols,
                       x.value().begin() + static_cast<size_t>(end) * cols);
    Shape shape = x.rank() == 2 ? Shape{len, x.dim(1)} : Shape{len};
    return make_op<T>("slice", std::move(shape), std::move(out), {x},
                      [begin, cols](TensorNode<T>& n) {
                        auto& in = *n.inputs[0];
                        if (!in.requires_grad) return;
                        auto& g = ensure_grad(in);
                        for (size_t i = 0; i < n.grad.size(); ++i)
                          g[static_cast<size_t>(begin) * cols + i] += n.grad[i];
                      });
  }
  const int rows = x.dim(0), cols = x.dim(1), len = end - begin;
  std::vector<T> out(static_cast<size_t>(rows) * len);
  for (int r = 0; r < rows; ++r)
    std::copy(x.value().begin() + static_cast<size_t>(r) * cols + begin,
              x.value().begin() + static_cast<size_t>(r) * cols + end,
              out.begin() + static_cast<size_t>(r) * len);
  return make_op<T>("slice", {rows, len}, std::move(out), {x},
                    [begin, rows, cols, len](TensorNode<T>& n) {
                      auto& in = *n.inputs[0];
                      if (!in.requires_grad) return;
                      auto& g = ensure_grad(in);
                      for (int r = 0; r < rows; ++r)
                        for (int c = 0; c < len; ++c)
                          g[static_cast<size_t>(r) * cols + begin + c] +=
                              n.grad[static_cast<size_t>(r) * len + c];
                    });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis) {
  require(!parts.empty(), "concat: no inputs");
  const int rank = parts[0].rank();
  require(rank >= 1 && rank <= 2, "concat: inputs must be 1-D or 2-D");
  require(axis >= 0 && axis < rank, "concat: bad axis ", axis);
  for (const auto& p : parts)
    require(p.rank() == rank, "concat: mixed ranks");
  if (rank == 1 || axis == 0) {
    const int cols = rank == 2 ? parts[0].dim(1) : 1;
    int total_rows = 0;
    for (const auto& p : parts) {
      if (rank == 2)
        require(p.dim(1) == cols, "concat: column mismatch");
      total_rows += p.dim(0);
    }
    std::vector<T> out;
    out.reserve(static_cast<size_t>(total_rows) * cols);
    std::vector<int> offsets;
    for (const auto& p : parts) {
      offsets.push_back(static_cast<int>(out.size()));
      out.insert(out.end(), p.value().begin(), p.value().end());
    }
    Shape shape = rank == 2 ? Shape{total_rows, cols} : Shape{total_rows};
    return make_op<T>("concat", std::move(shape), std::move(out), parts,
                      [offsets](TensorNode<T>& n) {
                        for (size_t j = 0; j < n.inputs.size(); ++j) {
                          auto& in = *n.inputs[j];
                          if (!in.requires_grad) continue;
                          auto& g = ensure_grad(in);
                          for (size_t i = 0; i < g.size(); ++i)
                            g[i] += n.grad[offsets[j] + i];
                        }
                      });
  }
  // axis == 1, rank 2
  const int rows = parts[0].dim(0);
  int total_cols = 0;
  for (const auto& p : parts) {
    require(p.dim(0) == rows, "concat: row mismatch");
    total_cols += p.dim(1);
  }
  std::vector<T> out(static_cast<size_t>(rows) * total_cols);
  std::vector<int> offsets;
  int off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const int cols = p.dim(1);
    for (int r = 0; r < rows; ++r)
      std::copy(p.value().begin() + static_cast<size_t>(r) * cols,
                p.value().begin() + static_cast<size_t>(r + 1) * cols,
                out.begin() + static_cast<size_t>(r) * total_cols + off);
    off += cols;
  }
  return make_op<T>(
      "concat", {rows, total_cols}, std::move(out), parts,
      [rows, total_cols, offsets](TensorNode<T>& n) {
        for (size_t j = 0; j < n.inputs.size(); ++j) {
          auto& in = *n.inputs[j];
          if (!in.requires_grad) continue;
          auto& g = ensure_grad(in);
          const int cols = in.shape[1];
          for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
              g[static_cast<size_t>(r) * cols + c] +=
                  n.grad[static_cast<size_t>(r) * total_cols + offsets[j] + c];
        }
      });
}

template <typename T>
std::vector<Tensor<T>> split(const Tensor<T>& x, int axis, int n) {
  require(n >= 1, "split: n must be >= 1");
  require(axis >= 0 && axis < x.rank(), "split: bad axis ", axis);
  const int size = x.dim(axis);
  require(size % n == 0, "split: axis of size ", size,
          " not divisible into ", n, " parts");
  const int step = size / n;
  std::vector<Tensor<T>> parts;
  parts.reserve(n);
  for (int i = 0; i < n; ++i)
    parts.push_back(slice(x, axis, i * step, (i + 1) * step));
  return parts;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T s = T(0);
  for (const T& v : x.value()) s += v;
  return make_op<T>("sum", {1}, {s}, {x}, [](TensorNode<T>& n) {
    auto& in = *n.inputs[0];
    if (!in.requires_grad) return;
    auto& g = ensure_grad(in);
    const T g0 = n.grad[0];
    for (auto& v : g) v += g0;
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  T s = T(0);
  for (const T& v : x.value()) s += v;
  const T inv = T(1) / T(x.numel());
  s *= inv;
  return make_op<T>("mean", {1}, {s}, {x}, [inv](TensorNode<T>& n) {
    auto& in = *n.inputs[0];
    if (!in.requires_grad) return;
    auto& g = ensure_grad(in);
    const T g0 = n.grad[0] * inv;
    for (auto& v : g) v += g0;
  });
}

// ---- Gradient checking -------------------------------------------------------

template <typename T>
T grad_check(const std::function<Tensor<T>(const Tensor<T>&)>& f,
             const Tensor<T>& x, T step) {
  require(step > T(0), "grad_check: step must be positive");
  std::vector<T> base(x.value().begin(), x.value().end());
  Tensor<T> xg = Tensor<T>::from_values(x.shape(), base);
  xg.set_requires_grad(true);
  Tensor<T> y = f(xg);
  require(y.numel() == 1, "grad_check: f must return a scalar");
  backward(y);
  const std::vector<T> analytic = xg.grad_or_zeros();

  T max_err = T(0);
  for (size_t i = 0; i < base.size(); ++i) {
    auto eval = [&](T delta) {
      std::vector<T> v = base;
      v[i] += delta;
      Tensor<T> xp = Tensor<T>::from_values(x.shape(), std::move(v));
      return f(xp).scalar();
    };
    const T numeric = (eval(step) - eval(-step)) / (T(2) * step);
    const T denom = std::max(
        {std::abs(analytic[i]), std::abs(numeric), static_cast<T>(1e-8)});
    max_err = std::max(max_err, std::abs(analytic[i] - numeric) / denom);
  }
  return max_err;
}

// ---- Explicit instantiation ---------------------------------------------------

#define CTXPRE_INSTANTIATE_TENSOR(T)                                          \
  template class Tensor<T>;                                                   \
  template Tensor<T> randn_tensor<T>(Shape, Rng&, double);                    \
  template void check_finite<T>(const char*, std::span<const T>);             \
  template std::vector<T>& ensure_grad<T>(TensorNode<T>&);                    \
  template Tensor<T> make_op<T>(const char*, Shape, std::vector<T>,           \
                                std::vector<Tensor<T>>,                       \
                                std::function<void(TensorNode<T>&)>);         \
  template void backward<T>(const Tensor<T>&);                                \
  template void backward_seeded<T>(const std::vector<Tensor<T>>&);            \
  template void run_backward_step<T>(const Tensor<T>&);                       \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                           \
  template Tensor<T> add_rowwise<T>(const Tensor<T>&, const Tensor<T>&);      \
  template Tensor<T> relu<T>(const Tensor<T>&);                               \
  template Tensor<T> gelu<T>(const Tensor<T>&);                               \
  template Tensor<T> exp_of<T>(const Tensor<T>&);                             \
  template Tensor<T> log_of<T>(const Tensor<T>&);                             \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> transpose<T>(const Tensor<T>&);                          \
  template Tensor<T> conv1d<T>(const Tensor<T>&, const Tensor<T>&,            \
                               const Tensor<T>&, int, int);                   \
  template Tensor<T> conv1d<T>(const Tensor<T>&, const Tensor<T>&, int, int); \
  template Tensor<T> softmax<T>(const Tensor<T>&, int);                       \
  template Tensor<T> log_softmax<T>(const Tensor<T>&, int);                   \
  template Tensor<T> masked_softmax<T>(const Tensor<T>&,                      \
                                       const std::vector<uint8_t>&);          \
  template Tensor<T> layer_norm<T>(const Tensor<T>&, const Tensor<T>&,        \
                                   const Tensor<T>&, T);                      \
  template Tensor<T> dot<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> slice<T>(const Tensor<T>&, int, int, int);               \
  template Tensor<T> concat<T>(const std::vector<Tensor<T>>&, int);           \
  template std::vector<Tensor<T>> split<T>(const Tensor<T>&, int, int);       \
  template Tensor<T> sum<T>(const Tensor<T>&);                                \
  template Tensor<T> mean<T>(const Tensor<T>&);                               \
  template T grad_check<T>(                                                   \
      const std::function<Tensor<T>(const Tensor<T>&)>&, const Tensor<T>&, T);

CTXPRE_INSTANTIATE_TENSOR(float)
CTXPRE_INSTANTIATE_TENSOR(double)

#undef CTXPRE_INSTANTIATE_TENSOR

}  // namespace ctxpre
