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

#include "namerec/tensor.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "namerec/errors.h"

namespace namerec {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << "x";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

size_t shape_size(const Shape& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor() : Tensor(Shape{1}, {0.0}) {}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : storage_(std::make_shared<Storage>()) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one dimension");
  if (shape_size(shape) != data.size()) {
    throw DimensionError("shape " + shape_to_string(shape) + " holds " +
                         std::to_string(shape_size(shape)) + " values, got " +
                         std::to_string(data.size()));
  }
  storage_->shape = std::move(shape);
  storage_->data = std::move(data);
  storage_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return filled(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  const size_t n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("expected a 2-D tensor, got " + shape_to_string(shape()));
  return shape()[0];
}

size_t Tensor::cols() const { return shape().back(); }

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on tensor of shape " + shape_to_string(shape()));
  return storage_->data[0];
}

std::span<double> Tensor::mutable_grad() const {
  if (storage_->grad.empty()) storage_->grad.assign(storage_->data.size(), 0.0);
  return storage_->grad;
}

void Tensor::zero_grad() const { std::fill(storage_->grad.begin(), storage_->grad.end(), 0.0); }

Tensor Tensor::clone() const { return Tensor(shape(), storage_->data, requires_grad()); }

bool Tape::needs_grad(std::initializer_list<const Tensor*> inputs) const {
  if (!recording_) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
}

void Tape::record(std::vector<Tensor> inputs, Tensor output, std::function<void()> backward_fn) {
  output.set_requires_grad(true);
  nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(backward_fn)});
}

namespace {

void require_2d(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(what) + ": expected a 2-D tensor, got " + shape_to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
}

// Output gradient of a recorded node. Present whenever the node is reached
// from the loss; nodes off the loss path are skipped by backward().
std::span<const double> out_grad(const Tensor& out) { return out.grad(); }

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

namespace {

// out[m×n] += a[m×k] · b[k×n]. Rows are processed four at a time so each
// row of b is loaded once per block; every output element still sums over
// k in ascending order, so a row's result does not depend on its batch.
void gemm_accumulate(const double* a, const double* b, double* out, size_t m, size_t k, size_t n) {
  size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* o0 = out + i * n;
    double* o1 = o0 + n;
    double* o2 = o1 + n;
    double* o3 = o2 + n;
    const double* a0 = a + i * k;
    for (size_t p = 0; p < k; ++p) {
      const double v0 = a0[p], v1 = a0[k + p], v2 = a0[2 * k + p], v3 = a0[3 * k + p];
      const double* brow = b + p * n;
      for (size_t j = 0; j < n; ++j) {
        const double bv = brow[j];
        o0[j] += v0 * bv;
        o1[j] += v1 * bv;
        o2[j] += v2 * bv;
        o3[j] += v3 * bv;
      }
    }
  }
  for (; i < m; ++i) {
    double* row = out + i * n;
    const double* arow = a + i * k;
    size_t p = 0;
    // Four rows of b per pass over the output row.
    for (; p + 4 <= k; p += 4) {
      const double v0 = arow[p], v1 = arow[p + 1], v2 = arow[p + 2], v3 = arow[p + 3];
      const double* b0 = b + p * n;
      const double* b1 = b0 + n;
      const double* b2 = b1 + n;
      const double* b3 = b2 + n;
      for (size_t j = 0; j < n; ++j) row[j] += v0 * b0[j] + v1 * b1[j] + v2 * b2[j] + v3 * b3[j];
    }
    for (; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

// out[k×n] += aᵀ · c for a[m×k], c[m×n].
void gemm_tn_accumulate(const double* a, const double* c, double* out, size_t m, size_t k, size_t n) {
  size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* c0 = c + i * n;
    const double* c1 = c0 + n;
    const double* c2 = c1 + n;
    const double* c3 = c2 + n;
    const double* a0 = a + i * k;
    for (size_t p = 0; p < k; ++p) {
      const double v0 = a0[p], v1 = a0[k + p], v2 = a0[2 * k + p], v3 = a0[3 * k + p];
      double* orow = out + p * n;
      for (size_t j = 0; j < n; ++j) orow[j] += v0 * c0[j] + v1 * c1[j] + v2 * c2[j] + v3 * c3[j];
    }
  }
  for (; i < m; ++i) {
    const double* crow = c + i * n;
    for (size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      double* orow = out + p * n;
      for (size_t j = 0; j < n; ++j) orow[j] += av * crow[j];
    }
  }
}

std::vector<double> transpose(std::span<const double> x, size_t rows, size_t cols) {
  std::vector<double> t(rows * cols);
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols; ++c) t[c * rows + r] = x[r * cols + c];
  }
  return t;
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner dimensions disagree for " + shape_to_string(a.shape()) + " · " +
                         shape_to_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  gemm_accumulate(a.data().data(), b.data().data(), out.data(), m, k, n);
  Tensor result({m, n}, std::move(out));
  if (tape.needs_grad({&a, &b})) {
    tape.record({a, b}, result, [a, b, result, m, k, n]() {
      const auto dc = out_grad(result);
      if (a.requires_grad()) {
        // dA = dC·Bᵀ
        const std::vector<double> bt = transpose(b.data(), k, n);
        gemm_accumulate(dc.data(), bt.data(), a.mutable_grad().data(), m, n, k);
      }
      if (b.requires_grad()) {
        // dB = Aᵀ·dC
        gemm_tn_accumulate(a.data().data(), dc.data(), b.mutable_grad().data(), m, k, n);
      }
    });
  }
  return result;
}

Tensor elementwise_unary(Tape& tape, const Tensor& x, UnaryFn fn) {
  std::vector<double> out(x.size());
  const auto xd = x.data();
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = fn == UnaryFn::kTanh ? std::tanh(xd[i]) : stable_sigmoid(xd[i]);
  }
  Tensor result(x.shape(), std::move(out));
  if (tape.needs_grad({&x})) {
    tape.record({x}, result, [x, result, fn]() mutable {
      const auto dy = out_grad(result);
      const auto y = result.data();
      auto dx = x.mutable_grad();
      for (size_t i = 0; i < dx.size(); ++i) {
        const double slope = fn == UnaryFn::kTanh ? 1.0 - y[i] * y[i] : y[i] * (1.0 - y[i]);
        dx[i] += dy[i] * slope;
      }
    });
  }
  return result;
}

Tensor elementwise_binary(Tape& tape, const Tensor& a, const Tensor& b, BinaryFn fn) {
  require_same_shape(a, b, fn == BinaryFn::kAdd ? "add" : "mul");
  std::vector<double> out(a.size());
  const auto ad = a.data();
  const auto bd = b.data();
  if (fn == BinaryFn::kAdd) {
    for (size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
  } else {
    for (size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
  }
  Tensor result(a.shape(), std::move(out));
  if (tape.needs_grad({&a, &b})) {
    tape.record({a, b}, result, [a, b, result, fn]() mutable {
      const auto dy = out_grad(result);
      if (a.requires_grad()) {
        auto da = a.mutable_grad();
        const auto bd = b.data();
        for (size_t i = 0; i < da.size(); ++i) da[i] += fn == BinaryFn::kAdd ? dy[i] : dy[i] * bd[i];
      }
      if (b.requires_grad()) {
        auto db = b.mutable_grad();
        const auto ad = a.data();
        for (size_t i = 0; i < db.size(); ++i) db[i] += fn == BinaryFn::kAdd ? dy[i] : dy[i] * ad[i];
      }
    });
  }
  return result;
}

Tensor add_row_vector(Tape& tape, const Tensor& x, const Tensor& bias) {
  require_2d(x, "add_row_vector");
  const size_t m = x.shape()[0], n = x.shape()[1];
  if (bias.size() != n) {
    throw DimensionError("add_row_vector: bias " + shape_to_string(bias.shape()) + " does not match rows of " +
                         shape_to_string(x.shape()));
  }
  std::vector<double> out(x.data().begin(), x.data().end());
  const auto bd = bias.data();
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = 0; j < n; ++j) out[i * n + j] += bd[j];
  }
  Tensor result(x.shape(), std::move(out));
  if (tape.needs_grad({&x, &bias})) {
    tape.record({x, bias}, result, [x, bias, result, m, n]() mutable {
      const auto dy = out_grad(result);
      if (x.requires_grad()) {
        auto dx = x.mutable_grad();
        for (size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
      }
      if (bias.requires_grad()) {
        auto db = bias.mutable_grad();
        for (size_t i = 0; i < m; ++i) {
          for (size_t j = 0; j < n; ++j) db[j] += dy[i * n + j];
        }
      }
    });
  }
  return result;
}

Tensor concat_last_dim(Tape& tape, const Tensor& a, const Tensor& b) {
  Shape lead_a(a.shape().begin(), a.shape().end() - 1);
  Shape lead_b(b.shape().begin(), b.shape().end() - 1);
  if (lead_a != lead_b) {
    throw DimensionError("concat_last_dim: leading dimensions differ for " + shape_to_string(a.shape()) +
                         " and " + shape_to_string(b.shape()));
  }
  const size_t p = a.cols(), q = b.cols(), w = p + q;
  const size_t outer = shape_size(lead_a);
  std::vector<double> out(outer * w);
  const auto ad = a.data();
  const auto bd = b.data();
  for (size_t r = 0; r < outer; ++r) {
    std::copy_n(ad.data() + r * p, p, out.data() + r * w);
    std::copy_n(bd.data() + r * q, q, out.data() + r * w + p);
  }
  Shape shape = lead_a;
  shape.push_back(w);
  Tensor result(std::move(shape), std::move(out));
  if (tape.needs_grad({&a, &b})) {
    tape.record({a, b}, result, [a, b, result, outer, p, q, w]() mutable {
      const auto dy = out_grad(result);
      if (a.requires_grad()) {
        auto da = a.mutable_grad();
        for (size_t r = 0; r < outer; ++r) {
          for (size_t j = 0; j < p; ++j) da[r * p + j] += dy[r * w + j];
        }
      }
      if (b.requires_grad()) {
        auto db = b.mutable_grad();
        for (size_t r = 0; r < outer; ++r) {
          for (size_t j = 0; j < q; ++j) db[r * q + j] += dy[r * w + p + j];
        }
      }
    });
  }
  return result;
}

Tensor slice_last_dim(Tape& tape, const Tensor& x, size_t begin, size_t end) {
  const size_t n = x.cols();
  if (begin > end || end > n) {
    throw DimensionError("slice_last_dim: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") outside " + shape_to_string(x.shape()));
  }
  const size_t w = end - begin;
  const size_t outer = x.size() / std::max<size_t>(n, 1);
  std::vector<double> out(outer * w);
  const auto xd = x.data();
  for (size_t r = 0; r < outer; ++r) std::copy_n(xd.data() + r * n + begin, w, out.data() + r * w);
  Shape shape = x.shape();
  shape.back() = w;
  Tensor result(std::move(shape), std::move(out));
  if (tape.needs_grad({&x})) {
    tape.record({x}, result, [x, result, outer, n, w, begin]() mutable {
      const auto dy = out_grad(result);
      auto dx = x.mutable_grad();
      for (size_t r = 0; r < outer; ++r) {
        for (size_t j = 0; j < w; ++j) dx[r * n + begin + j] += dy[r * w + j];
      }
    });
  }
  return result;
}

Tensor concat_rows(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no parts");
  const size_t n = parts[0].cols();
  size_t total = 0;
  bool grad = false;
  for (const Tensor& t : parts) {
    require_2d(t, "concat_rows");
    if (t.cols() != n) {
      throw DimensionError("concat_rows: column mismatch " + shape_to_string(parts[0].shape()) + " vs " +
                           shape_to_string(t.shape()));
    }
    total += t.shape()[0];
    grad = grad || t.requires_grad();
  }
  std::vector<double> out;
  out.reserve(total * n);
  for (const Tensor& t : parts) out.insert(out.end(), t.data().begin(), t.data().end());
  Tensor result({total, n}, std::move(out));
  if (tape.recording() && grad) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    tape.record(inputs, result, [inputs, result]() mutable {
      const auto dy = out_grad(result);
      size_t offset = 0;
      for (Tensor& t : inputs) {
        if (t.requires_grad()) {
          auto dt = t.mutable_grad();
          for (size_t i = 0; i < dt.size(); ++i) dt[i] += dy[offset + i];
        }
        offset += t.size();
      }
    });
  }
  return result;
}

Tensor gather_rows(Tape& tape, const Tensor& table, std::span<const int> ids) {
  require_2d(table, "gather_rows");
  const size_t v = table.shape()[0], d = table.shape()[1];
  std::vector<double> out(ids.size() * d);
  const auto td = table.data();
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<size_t>(ids[i]) >= v) {
      throw IndexError("gather_rows: id " + std::to_string(ids[i]) + " outside table of " + std::to_string(v) +
                       " rows");
    }
    std::copy_n(td.data() + static_cast<size_t>(ids[i]) * d, d, out.data() + i * d);
  }
  Tensor result({ids.size(), d}, std::move(out));
  if (tape.needs_grad({&table})) {
    std::vector<int> idx(ids.begin(), ids.end());
    tape.record({table}, result, [table, result, idx = std::move(idx), d]() mutable {
      const auto dy = out_grad(result);
      auto dt = table.mutable_grad();
      for (size_t i = 0; i < idx.size(); ++i) {
        double* row = dt.data() + static_cast<size_t>(idx[i]) * d;
        for (size_t j = 0; j < d; ++j) row[j] += dy[i * d + j];
      }
    });
  }
  return result;
}

Tensor select_rows(Tape& tape, const std::vector<bool>& take_first, const Tensor& a, const Tensor& b) {
  require_2d(a, "select_rows");
  require_same_shape(a, b, "select_rows");
  const size_t m = a.shape()[0], n = a.shape()[1];
  if (take_first.size() != m) {
    throw DimensionError("select_rows: mask of length " + std::to_string(take_first.size()) + " for " +
                         shape_to_string(a.shape()));
  }
  std::vector<double> out(m * n);
  for (size_t i = 0; i < m; ++i) {
    const auto src = take_first[i] ? a.data() : b.data();
    std::copy_n(src.data() + i * n, n, out.data() + i * n);
  }
  Tensor result(a.shape(), std::move(out));
  if (tape.needs_grad({&a, &b})) {
    std::vector<bool> mask(take_first.begin(), take_first.end());
    tape.record({a, b}, result, [a, b, result, mask = std::move(mask), m, n]() mutable {
      const auto dy = out_grad(result);
      for (size_t i = 0; i < m; ++i) {
        const Tensor& target = mask[i] ? a : b;
        if (!target.requires_grad()) continue;
        auto dt = target.mutable_grad();
        for (size_t j = 0; j < n; ++j) dt[i * n + j] += dy[i * n + j];
      }
    });
  }
  return result;
}

Tensor softmax_rows(Tape& tape, const Tensor& x) {
  require_2d(x, "softmax_rows");
  const size_t t = x.shape()[0], c = x.shape()[1];
  if (c == 0) throw DimensionError("softmax_rows: zero classes in " + shape_to_string(x.shape()));
  std::vector<double> out(t * c);
  const auto xd = x.data();
  for (size_t i = 0; i < t; ++i) {
    const double* row = xd.data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double total = 0.0;
    for (size_t j = 0; j < c; ++j) {
      out[i * c + j] = std::exp(row[j] - mx);
      total += out[i * c + j];
    }
    for (size_t j = 0; j < c; ++j) out[i * c + j] /= total;
  }
  Tensor result(x.shape(), std::move(out));
  if (tape.needs_grad({&x})) {
    tape.record({x}, result, [x, result, t, c]() mutable {
      const auto dy = out_grad(result);
      const auto y = result.data();
      auto dx = x.mutable_grad();
      for (size_t i = 0; i < t; ++i) {
        double dot = 0.0;
        for (size_t j = 0; j < c; ++j) dot += dy[i * c + j] * y[i * c + j];
        for (size_t j = 0; j < c; ++j) dx[i * c + j] += y[i * c + j] * (dy[i * c + j] - dot);
      }
    });
  }
  return result;
}

Tensor sparse_cross_entropy(Tape& tape, const Tensor& probs, std::span<const int> targets,
                            const std::vector<bool>& mask) {
  require_2d(probs, "sparse_cross_entropy");
  const size_t t = probs.shape()[0], c = probs.shape()[1];
  if (targets.size() != t || mask.size() != t) {
    throw DimensionError("sparse_cross_entropy: " + std::to_string(targets.size()) + " targets and " +
                         std::to_string(mask.size()) + " mask entries for probs " +
                         shape_to_string(probs.shape()));
  }
  size_t count = 0;
  double total = 0.0;
  const auto pd = probs.data();
  for (size_t i = 0; i < t; ++i) {
    if (!mask[i]) continue;
    if (targets[i] < 0 || static_cast<size_t>(targets[i]) >= c) {
      throw IndexError("sparse_cross_entropy: target " + std::to_string(targets[i]) + " at row " +
                       std::to_string(i) + " outside [0, " + std::to_string(c) + ")");
    }
    total -= std::log(std::max(pd[i * c + static_cast<size_t>(targets[i])], kLogClamp));
    ++count;
  }
  if (count == 0) throw ContractError("sparse_cross_entropy: every position is masked");
  Tensor result = Tensor::scalar(total / static_cast<double>(count));
  if (tape.needs_grad({&probs})) {
    std::vector<int> tgt(targets.begin(), targets.end());
    std::vector<bool> msk(mask.begin(), mask.end());
    tape.record({probs}, result,
                [probs, result, tgt = std::move(tgt), msk = std::move(msk), c, count]() mutable {
                  const double dl = out_grad(result)[0] / static_cast<double>(count);
                  const auto pd = probs.data();
                  auto dp = probs.mutable_grad();
                  for (size_t i = 0; i < msk.size(); ++i) {
                    if (!msk[i]) continue;
                    const size_t k = i * c + static_cast<size_t>(tgt[i]);
                    if (pd[k] > kLogClamp) dp[k] -= dl / pd[k];
                  }
                });
  }
  return result;
}

Tensor sum(Tape& tape, const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tensor result = Tensor::scalar(total);
  if (tape.needs_grad({&x})) {
    tape.record({x}, result, [x, result]() mutable {
      const double dy = out_grad(result)[0];
      for (double& g : x.mutable_grad()) g += dy;
    });
  }
  return result;
}

void backward(const Tensor& loss, Tape& tape) {
  if (loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got " + shape_to_string(loss.shape()));
  }
  if (!loss.requires_grad()) throw ContractError("backward: loss was not produced on a recording tape");
  Tensor root = loss;
  root.mutable_grad()[0] += 1.0;
  for (auto it = tape.nodes_.rbegin(); it != tape.nodes_.rend(); ++it) {
    if (!it->output.has_grad()) continue;
    it->backward_fn();
  }
}

double finite_diff_check(const ScalarFn& f, Tensor x, double eps, Stencil stencil) {
  if (!(eps > 0)) throw ContractError("finite_diff_check: eps must be positive");
  const bool saved = x.requires_grad();
  x.set_requires_grad(true);
  x.zero_grad();
  std::vector<double> analytic;
  {
    Tape tape;
    Tensor loss = f(tape);
    backward(loss, tape);
    analytic.assign(x.grad().begin(), x.grad().end());
    if (analytic.empty()) analytic.assign(x.size(), 0.0);
  }
  auto eval = [&f]() {
    Tape tape(false);
    return f(tape).item();
  };
  double worst = 0.0;
  auto xd = x.data();
  for (size_t i = 0; i < xd.size(); ++i) {
    const double orig = xd[i];
    auto at = [&](double offset) {
      xd[i] = orig + offset;
      return eval();
    };
    double numeric = 0.0;
    if (stencil == Stencil::kTwoPoint) {
      numeric = (at(eps) - at(-eps)) / (2.0 * eps);
    } else {
      numeric = (8.0 * (at(eps) - at(-eps)) - (at(2.0 * eps) - at(-2.0 * eps))) / (12.0 * eps);
    }
    xd[i] = orig;
    const double err = std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    worst = std::max(worst, err);
  }
  x.zero_grad();
  x.set_requires_grad(saved);
  return worst;
}

}  // namespace namerec
