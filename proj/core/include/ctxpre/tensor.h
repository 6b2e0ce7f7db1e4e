// core/include/ctxpre/tensor.h

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

#ifndef CTXPRE_TENSOR_H_
#define CTXPRE_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ctxpre/common.h"
#include "ctxpre/rng.h"

namespace ctxpre {

// Define-by-run reverse-mode automatic differentiation.
//
// A Tensor is a shared handle to a node of the computation DAG.  Each
// operation allocates a fresh node holding the result value; when any input
// requires gradients the node also records its inputs and a backward closure
// that routes the node's output gradient into the inputs' gradient buffers.
// When no input requires gradients the node is a plain value (no graph is
// recorded), so inference runs without bookkeeping overhead.
//
// Values are immutable once a node is created; only gradient buffers are
// written afterwards.  The optimizer mutates leaf values through
// overwrite_values() between steps, when no graph referencing them is alive.
//
// Matrices are row-major.  A tensor of shape {t, c} holds t rows (frames) of
// c columns (channels).  Scalars have shape {1}.

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated lazily during backward
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorNode<T>>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(TensorNode<T>&)> backward_fn;
};

template <typename T>
using NodePtr = std::shared_ptr<TensorNode<T>>;

template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, T fill);
  static Tensor from_values(Shape shape, std::vector<T> values);
  static Tensor scalar_value(T v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  int rank() const { return static_cast<int>(shape().size()); }
  int dim(int axis) const;
  int64_t numel() const;

  std::span<const T> value() const;
  T at(int64_t i) const;
  T at(int64_t row, int64_t col) const;
  T scalar() const;  // requires numel() == 1

  bool requires_grad() const;
  // Marks a leaf as a differentiation target.  Must be called before the
  // tensor is used in any operation.
  Tensor& set_requires_grad(bool value);

  // Gradient accumulated by backward(); empty if this node was never reached.
  const std::vector<T>& grad() const;
  // Gradient as a span, materializing zeros if absent.
  std::vector<T> grad_or_zeros() const;
  void zero_grad();
  // Seeds the gradient buffer directly (used when driving backward manually).
  void seed_grad(std::span<const T> g);

  // Overwrites leaf values in place.  Only valid on leaves, between graph
  // lifetimes; see the class comment.
  void overwrite_values(std::span<const T> values);

  // Value copy detached from the graph.
  Tensor detach() const;

  const NodePtr<T>& node() const { return node_; }
  explicit Tensor(NodePtr<T> node) : node_(std::move(node)) {}

 private:
  NodePtr<T> node_;
};

// Leaf filled with independent normal draws of the given standard deviation.
template <typename T>
Tensor<T> randn_tensor(Shape shape, Rng& rng, double stddev = 1.0);

// ---- Primitive operations ------------------------------------------------
// All operations validate shapes and reject non-finite inputs.

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c);

// x: {t, c}, bias: {c}; adds bias to every row.
template <typename T>
Tensor<T> add_rowwise(const Tensor<T>& x, const Tensor<T>& bias);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
// Exact Gaussian error-function form.
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);
template <typename T>
Tensor<T> exp_of(const Tensor<T>& x);
// Requires strictly positive inputs.
template <typename T>
Tensor<T> log_of(const Tensor<T>& x);

// a: {m, k}, b: {k, n} -> {m, n}.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> transpose(const Tensor<T>& x);

// 1-D convolution over time.
//   x: {t, c_in}, w: {k, c_in, c_out}, bias: {c_out}.
// The input is padded with `left_pad` zero frames on the left only, so output
// frame t sees input frames at indices t*stride - left_pad + [0, k).
// Output length: (t + left_pad - k) / stride + 1 (floor), which must be >= 1.
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias,
                 int stride, int left_pad);
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, int stride,
                 int left_pad);

// Softmax over `axis` of a 1-D or 2-D tensor (axis 0 for 1-D; 0 or 1 for 2-D).
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis);
template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x, int axis);

// Row-wise softmax over the entries where mask != 0; masked entries get
// probability exactly zero and receive exactly zero gradient.  mask has one
// byte per element of x (row-major) and every row must keep at least one
// entry.  This is how attention restricts each query to its window: scores
// outside the window never enter the normalization, which is numerically
// identical to adding -inf before an ordinary softmax but keeps every stored
// value finite.
template <typename T>
Tensor<T> masked_softmax(const Tensor<T>& x, const std::vector<uint8_t>& mask);

// Row-wise layer normalization of x: {t, c} with learnable gain/bias: {c}.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain,
                     const Tensor<T>& bias, T eps);

// Dot product of two 1-D tensors -> scalar.
template <typename T>
Tensor<T> dot(const Tensor<T>& a, const Tensor<T>& b);

// Contiguous slice along `axis` (1-D or 2-D), rows [begin, end).
template <typename T>
Tensor<T> slice(const Tensor<T>& x, int axis, int begin, int end);
template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis);
// Splits into `n` equal parts along `axis`.
template <typename T>
std::vector<Tensor<T>> split(const Tensor<T>& x, int axis, int n);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

// ---- Graph construction helper --------------------------------------------

// Creates an op node.  If any input requires grad, records inputs and the
// backward closure; otherwise produces a plain value node.
template <typename T>
Tensor<T> make_op(const char* op, Shape shape, std::vector<T> value,
                  std::vector<Tensor<T>> inputs,
                  std::function<void(TensorNode<T>&)> backward_fn);

// Throws NumericalError if any value is not finite.
template <typename T>
void check_finite(const char* op, std::span<const T> values);

// Allocates (zeroed) the node's grad buffer if absent and returns it.
template <typename T>
std::vector<T>& ensure_grad(TensorNode<T>& node);

// ---- Backward ------------------------------------------------------------

// Full reverse pass from a scalar loss; seeds d(loss)/d(loss) = 1.
template <typename T>
void backward(const Tensor<T>& loss);

// Reverse pass from nodes whose grad buffers are already seeded.  Visits each
// reachable node exactly once, in reverse topological order.
template <typename T>
void backward_seeded(const std::vector<Tensor<T>>& roots);

// Runs a single node's backward closure (the node's grad must be seeded),
// without recursing into its inputs.
template <typename T>
void run_backward_step(const Tensor<T>& out);

// ---- Gradient checking -----------------------------------------------------

// Compares analytic gradients of a scalar-valued function f at x against
// central finite differences with the given step.  Returns the maximum over
// coordinates of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
template <typename T>
T grad_check(const std::function<Tensor<T>(const Tensor<T>&)>& f,
             const Tensor<T>& x, T step);

// ---- BLAS bridge -----------------------------------------------------------

// Row-major GEMM: C = alpha * op(A) * op(B) + beta * C.
template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a,
          int lda, const T* b, int ldb, T beta, T* c, int ldc);

}  // namespace ctxpre

#endif  // CTXPRE_TENSOR_H_
