// Copyright 2026 The namerec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense float64 tensors with a reverse-mode autodiff tape.
//
// A Tensor is a cheap handle onto shared storage, so parameters can be
// referenced from many tape nodes while their gradients accumulate in one
// place. Every op takes the Tape explicitly; when the tape is not recording,
// or no input requires a gradient, the op only computes its value.
//
// There is no implicit broadcasting. Every shape mismatch throws
// DimensionError naming both shapes.

#ifndef NAMEREC_TENSOR_H_
#define NAMEREC_TENSOR_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace namerec {

using Shape = std::vector<size_t>;

std::string shape_to_string(const Shape& shape);
size_t shape_size(const Shape& shape);

class Tensor {
 public:
  // A 1-element tensor of shape {1} holding 0.
  Tensor();
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  const Shape& shape() const { return storage_->shape; }
  size_t rank() const { return storage_->shape.size(); }
  size_t size() const { return storage_->data.size(); }
  // Leading dimension for 2-D tensors.
  size_t rows() const;
  // Last dimension.
  size_t cols() const;

  std::span<double> data() { return storage_->data; }
  std::span<const double> data() const { return storage_->data; }
  double& operator[](size_t i) { return storage_->data[i]; }
  double operator[](size_t i) const { return storage_->data[i]; }
  double at(size_t row, size_t col) const { return storage_->data[row * cols() + col]; }
  // Value of a single-element tensor.
  double item() const;

  bool requires_grad() const { return storage_->requires_grad; }
  void set_requires_grad(bool value) { storage_->requires_grad = value; }

  bool has_grad() const { return !storage_->grad.empty(); }
  // Empty span when no gradient has been accumulated yet.
  std::span<const double> grad() const { return storage_->grad; }
  // Gradient storage is autodiff bookkeeping and stays writable through
  // const handles. Allocates a zero gradient on first use.
  std::span<double> mutable_grad() const;
  void zero_grad() const;

  // Deep copy that shares nothing with this tensor. The copy does not carry
  // the gradient.
  Tensor clone() const;
  bool shares_storage_with(const Tensor& other) const { return storage_ == other.storage_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> storage_;
};

// Ordered record of differentiable operations. A tape and the tensors it
// references belong to one thread.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  // True when an op over these inputs has to be recorded.
  bool needs_grad(std::initializer_list<const Tensor*> inputs) const;

  // Appends a node. `backward_fn` reads the output gradient and accumulates
  // into the inputs that require gradients. The output is marked as
  // requiring a gradient.
  void record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward_fn);

 private:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward_fn;
  };

  friend void backward(const Tensor& loss, Tape& tape);

  bool recording_;
  std::vector<Node> nodes_;
};

enum class UnaryFn { kTanh, kSigmoid };
enum class BinaryFn { kAdd, kMul };

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor elementwise_unary(Tape& tape, const Tensor& x, UnaryFn fn);
Tensor elementwise_binary(Tape& tape, const Tensor& a, const Tensor& b, BinaryFn fn);
inline Tensor tanh(Tape& tape, const Tensor& x) { return elementwise_unary(tape, x, UnaryFn::kTanh); }
inline Tensor sigmoid(Tape& tape, const Tensor& x) { return elementwise_unary(tape, x, UnaryFn::kSigmoid); }
inline Tensor add(Tape& tape, const Tensor& a, const Tensor& b) { return elementwise_binary(tape, a, b, BinaryFn::kAdd); }
inline Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) { return elementwise_binary(tape, a, b, BinaryFn::kMul); }

// x [m×n] plus bias [n] added to every row. Explicit, not broadcasting.
Tensor add_row_vector(Tape& tape, const Tensor& x, const Tensor& bias);

// [...×p] ++ [...×q] -> [...×(p+q)]; all leading dimensions must agree.
Tensor concat_last_dim(Tape& tape, const Tensor& a, const Tensor& b);
// Columns [begin, end) of the last dimension.
Tensor slice_last_dim(Tape& tape, const Tensor& x, size_t begin, size_t end);
// Stacks 2-D tensors with equal column counts along the first dimension.
Tensor concat_rows(Tape& tape, std::span<const Tensor> parts);
// out[i] = table[ids[i]]; the backward pass scatter-adds into the table.
Tensor gather_rows(Tape& tape, const Tensor& table, std::span<const int> ids);
// out[r] = take_first[r] ? a[r] : b[r] for 2-D tensors of equal shape.
Tensor select_rows(Tape& tape, const std::vector<bool>& take_first, const Tensor& a, const Tensor& b);

Tensor softmax_rows(Tape& tape, const Tensor& x);

// Lower bound applied to probabilities before taking logs.
inline constexpr double kLogClamp = 1e-12;

// Mean over unmasked rows of -log(probs[i][targets[i]]). Throws IndexError
// for an unmasked target outside [0, c) and ContractError when every row is
// masked.
Tensor sparse_cross_entropy(Tape& tape, const Tensor& probs, std::span<const int> targets,
                            const std::vector<bool>& mask);

// Sum of all elements as a {1} tensor.
Tensor sum(Tape& tape, const Tensor& x);

// Runs the tape in reverse from a scalar loss. Gradients accumulate into
// every reachable tensor that requires one; callers reset parameter
// gradients between steps with zero_grad().
void backward(const Tensor& loss, Tape& tape);

// Central-difference gradient check of `f` with respect to `x`. Returns
// max_i |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
// `f` is evaluated once on a recording tape and then 2·size(x) times on
// non-recording tapes; it must be a pure function of the tensor values.
// kFourPoint uses f(x±eps) and f(x±2·eps), with O(eps^4) truncation error.
using ScalarFn = std::function<Tensor(Tape&)>;
enum class Stencil { kTwoPoint, kFourPoint };
double finite_diff_check(const ScalarFn& f, Tensor x, double eps = 1e-5, Stencil stencil = Stencil::kTwoPoint);

// Settings for whole-model checks. A full model has many gradients near
// 1e-8, where the two-point formula is limited by the loss ulp over 2·eps
// for small eps and by truncation for large eps.
inline constexpr double kGradcheckStep = 1e-3;
inline constexpr Stencil kGradcheckStencil = Stencil::kFourPoint;

}  // namespace namerec

#endif  // NAMEREC_TENSOR_H_
