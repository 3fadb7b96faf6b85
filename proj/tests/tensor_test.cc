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

#include <gtest/gtest.h>

#include <cmath>

#include "namerec/errors.h"
#include "namerec/rng.h"

namespace namerec {
namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -2.0, double hi = 2.0) {
  std::vector<double> data(shape_size(shape));
  for (double& x : data) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(data));
}

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

TEST(TensorTest, ConstructionChecksSize) {
  EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), DimensionError);
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.at(1, 2), 6.0);
  EXPECT_FALSE(t.has_grad());
}

TEST(TensorTest, MatmulIdentity) {
  Tape tape(false);
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor b({2, 2}, {5, 6, 7, 8});
  EXPECT_EQ(values(matmul(tape, eye, b)), (std::vector<double>{5, 6, 7, 8}));
}

TEST(TensorTest, MatmulDot) {
  Tape tape(false);
  Tensor a({1, 2}, {1, 2});
  Tensor b({2, 1}, {3, 4});
  EXPECT_EQ(matmul(tape, a, b).item(), 11.0);
}

TEST(TensorTest, MatmulMatchesTripleLoop) {
  Rng rng(7);
  Tape tape(false);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t m = 1 + rng.below(8), k = 1 + rng.below(8), n = 1 + rng.below(8);
    Tensor a = random_tensor(rng, {m, k});
    Tensor b = random_tensor(rng, {k, n});
    Tensor c = matmul(tape, a, b);
    ASSERT_EQ(c.shape(), (Shape{m, n}));
    for (size_t i = 0; i < m; ++i) {
      for (size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (size_t p = 0; p < k; ++p) s += a.at(i, p) * b.at(p, j);
        EXPECT_NEAR(c.at(i, j), s, 1e-12);
      }
    }
  }
}

TEST(TensorTest, MatmulShapeMismatchNamesShapes) {
  Tape tape(false);
  try {
    matmul(tape, Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos) << e.what();
  }
}

TEST(TensorTest, UnaryValues) {
  Tape tape(false);
  EXPECT_EQ(tanh(tape, Tensor::scalar(0)).item(), 0.0);
  EXPECT_EQ(sigmoid(tape, Tensor::scalar(0)).item(), 0.5);
  for (double x : {100.0, 800.0, -100.0, -800.0, 3.0}) {
    const double got = sigmoid(tape, Tensor::scalar(x)).item();
    const double ref = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    EXPECT_TRUE(std::isfinite(got));
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
    EXPECT_NEAR(got, ref, 1e-15);
  }
}

TEST(TensorTest, BinaryIdentitiesAndValues) {
  Rng rng(3);
  Tape tape(false);
  Tensor x = random_tensor(rng, {3, 4});
  EXPECT_EQ(values(add(tape, x, Tensor::zeros({3, 4}))), values(x));
  EXPECT_EQ(values(mul(tape, x, Tensor::filled({3, 4}, 1.0))), values(x));
  EXPECT_EQ(values(mul(tape, Tensor({2}, {2, 3}), Tensor({2}, {4, 5}))), (std::vector<double>{8, 15}));
  EXPECT_THROW(add(tape, Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), DimensionError);
}

TEST(TensorTest, ConcatLastDim) {
  Tape tape(false);
  EXPECT_EQ(values(concat_last_dim(tape, Tensor({2}, {1, 2}), Tensor({1}, {3}))), (std::vector<double>{1, 2, 3}));
  Tensor x({2, 2}, {1, 2, 3, 4});
  Tensor c = concat_last_dim(tape, x, Tensor({2, 0}, {}));
  EXPECT_EQ(c.shape(), x.shape());
  EXPECT_EQ(values(c), values(x));
  EXPECT_THROW(concat_last_dim(tape, Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), DimensionError);
}

TEST(TensorTest, ConcatBackwardGivesOnes) {
  Rng rng(5);
  Tensor a = random_tensor(rng, {2, 3});
  Tensor b = random_tensor(rng, {2, 2});
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  Tape tape;
  Tensor c = concat_last_dim(tape, a, b);
  EXPECT_EQ(c.shape(), (Shape{2, 5}));
  backward(sum(tape, c), tape);
  for (double g : a.grad()) EXPECT_EQ(g, 1.0);
  for (double g : b.grad()) EXPECT_EQ(g, 1.0);
}

TEST(TensorTest, SoftmaxKnownRows) {
  Tape tape(false);
  Tensor p = softmax_rows(tape, Tensor({3, 3}, {0, 0, 0, 0, std::log(2.0), 0, 1000, 1000, 1000}));
  for (size_t j = 0; j < 3; ++j) EXPECT_NEAR(p.at(0, j), 1.0 / 3.0, 1e-15);
  Tensor q = softmax_rows(tape, Tensor({1, 2}, {0, std::log(2.0)}));
  EXPECT_NEAR(q.at(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(q.at(0, 1), 2.0 / 3.0, 1e-15);
  Tensor r = softmax_rows(tape, Tensor({1, 2}, {1000, 1000}));
  EXPECT_EQ(r.at(0, 0), 0.5);
  EXPECT_EQ(r.at(0, 1), 0.5);
}

TEST(TensorTest, SoftmaxRowsSumToOneAndShiftInvariant) {
  Rng rng(11);
  Tape tape(false);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t t = 1 + rng.below(6), c = 1 + rng.below(6);
    Tensor x = random_tensor(rng, {t, c}, -10, 10);
    const double shift = rng.uniform(-50, 50);
    Tensor xs = x.clone();
    for (double& v : xs.data()) v += shift;
    Tensor p = softmax_rows(tape, x);
    Tensor ps = softmax_rows(tape, xs);
    for (size_t i = 0; i < t; ++i) {
      double s = 0.0;
      for (size_t j = 0; j < c; ++j) {
        s += p.at(i, j);
        EXPECT_NEAR(p.at(i, j), ps.at(i, j), 1e-12);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(TensorTest, CrossEntropyCases) {
  Tape tape(false);
  const std::vector<bool> all = {true};
  std::vector<int> zero = {0};
  EXPECT_NEAR(sparse_cross_entropy(tape, Tensor({1, 3}, {1, 0, 0}), zero, all).item(), 0.0, 1e-12);
  const double third = 1.0 / 3.0;
  Tensor uniform({2, 3}, {third, third, third, third, third, third});
  std::vector<int> targets = {2, 1};
  EXPECT_NEAR(sparse_cross_entropy(tape, uniform, targets, {true, true}).item(), std::log(3.0), 1e-12);
  Tensor two({2, 2}, {0.25, 0.75, 0.6, 0.4});
  std::vector<int> t2 = {1, 0};
  EXPECT_NEAR(sparse_cross_entropy(tape, two, t2, {true, false}).item(), -std::log(0.75), 1e-15);
  EXPECT_NEAR(sparse_cross_entropy(tape, two, t2, {false, true}).item(), -std::log(0.6), 1e-15);
  EXPECT_NEAR(sparse_cross_entropy(tape, two, t2, {true, true}).item(), -(std::log(0.75) + std::log(0.6)) / 2, 1e-15);
}

TEST(TensorTest, CrossEntropyErrors) {
  Tape tape(false);
  Tensor p({2, 2}, {0.5, 0.5, 0.5, 0.5});
  std::vector<int> bad = {0, 2};
  EXPECT_THROW(sparse_cross_entropy(tape, p, bad, {true, true}), IndexError);
  // A bad target at a masked position is never read.
  EXPECT_NO_THROW(sparse_cross_entropy(tape, p, bad, {true, false}));
  std::vector<int> ok = {0, 1};
  EXPECT_THROW(sparse_cross_entropy(tape, p, ok, {false, false}), ContractError);
}

TEST(TensorTest, CrossEntropyMatchesScalarOracle) {
  Rng rng(19);
  Tape tape(false);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t t = 1 + rng.below(7), c = 1 + rng.below(5);
    Tensor logits = random_tensor(rng, {t, c}, -5, 5);
    Tensor probs = softmax_rows(tape, logits);
    std::vector<int> targets(t);
    std::vector<bool> mask(t);
    size_t live = 0;
    for (size_t i = 0; i < t; ++i) {
      targets[i] = static_cast<int>(rng.below(c));
      mask[i] = rng.below(4) != 0;
      live += mask[i];
    }
    if (live == 0) mask[0] = true, live = 1;
    double ref = 0.0;
    for (size_t i = 0; i < t; ++i) {
      if (!mask[i]) continue;
      double mx = -1e300;
      for (size_t j = 0; j < c; ++j) mx = std::max(mx, logits.at(i, j));
      double z = 0.0;
      for (size_t j = 0; j < c; ++j) z += std::exp(logits.at(i, j) - mx);
      ref -= std::log(std::max(kLogClamp, std::exp(logits.at(i, targets[i]) - mx) / z));
    }
    ref /= static_cast<double>(live);
    EXPECT_NEAR(sparse_cross_entropy(tape, probs, targets, mask).item(), ref, 1e-12);
  }
}

TEST(TensorTest, BackwardSumAndSquare) {
  Rng rng(2);
  Tensor x = random_tensor(rng, {2, 3});
  x.set_requires_grad(true);
  {
    Tape tape;
    backward(sum(tape, x), tape);
    for (double g : x.grad()) EXPECT_EQ(g, 1.0);
  }
  x.zero_grad();
  {
    Tape tape;
    backward(sum(tape, mul(tape, x, x)), tape);
    for (size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x.grad()[i], 2 * x[i], 1e-15);
  }
}

TEST(TensorTest, BackwardAccumulatesAcrossFanOut) {
  Tensor x({2}, {1.5, -2.0}, true);
  Tape tape;
  Tensor y = add(tape, mul(tape, x, x), x);  // x² + x
  backward(sum(tape, add(tape, y, x)), tape);  // grad 2x + 2
  EXPECT_DOUBLE_EQ(x.grad()[0], 5.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], -2.0);
}

TEST(TensorTest, BackwardRejectsNonScalar) {
  Tensor x({2}, {1, 2}, true);
  Tape tape;
  Tensor y = mul(tape, x, x);
  EXPECT_THROW(backward(y, tape), ContractError);
}

TEST(TensorTest, FiniteDiffOfSumIsExact) {
  Rng rng(4);
  Tensor x = random_tensor(rng, {3, 3});
  EXPECT_LE(finite_diff_check([&](Tape& t) { return sum(t, x); }, x), 1e-10);
}

TEST(TensorTest, FiniteDiffOfSquares) {
  Tensor x({3}, {1, 2, 3});
  EXPECT_LE(finite_diff_check([&](Tape& t) { return sum(t, mul(t, x, x)); }, x), 1e-7);
}

TEST(TensorTest, FiniteDiffSoftmaxCrossEntropy) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor logits = random_tensor(rng, {4, 3});
    std::vector<int> targets = {0, 2, 1, 1};
    std::vector<bool> mask = {true, true, false, true};
    auto f = [&](Tape& t) { return sparse_cross_entropy(t, softmax_rows(t, logits), targets, mask); };
    EXPECT_LE(finite_diff_check(f, logits), 1e-6);
  }
}

// Every op's backward rule against central differences on random inputs.
TEST(TensorTest, EveryOpPassesGradientCheck) {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor a = random_tensor(rng, {3, 4});
    Tensor b = random_tensor(rng, {4, 2});
    Tensor c = random_tensor(rng, {3, 4});
    Tensor w = random_tensor(rng, {3, 2});
    Tensor bias = random_tensor(rng, {4});
    Tensor table = random_tensor(rng, {5, 4});
    std::vector<int> ids = {4, 0, 4};
    std::vector<bool> pick = {true, false, true};
    // Weighted sum so the loss is not symmetric in its elements.
    auto weighted = [&](Tape& t, const Tensor& x) {
      Tensor weights = Tensor::zeros(x.shape());
      for (size_t i = 0; i < x.size(); ++i) weights[i] = 0.3 + 0.1 * static_cast<double>(i % 7);
      return sum(t, mul(t, x, weights));
    };
    auto check = [&](const char* what, const ScalarFn& f, Tensor x) {
      EXPECT_LE(finite_diff_check(f, x), 1e-4) << what;
    };
    check("matmul a", [&](Tape& t) { return weighted(t, matmul(t, a, b)); }, a);
    check("matmul b", [&](Tape& t) { return weighted(t, matmul(t, a, b)); }, b);
    check("tanh", [&](Tape& t) { return weighted(t, tanh(t, a)); }, a);
    check("sigmoid", [&](Tape& t) { return weighted(t, sigmoid(t, a)); }, a);
    check("add", [&](Tape& t) { return weighted(t, add(t, a, c)); }, c);
    check("mul a", [&](Tape& t) { return weighted(t, mul(t, a, c)); }, a);
    check("mul c", [&](Tape& t) { return weighted(t, mul(t, a, c)); }, c);
    check("add_row_vector x", [&](Tape& t) { return weighted(t, add_row_vector(t, a, bias)); }, a);
    check("add_row_vector bias", [&](Tape& t) { return weighted(t, add_row_vector(t, a, bias)); }, bias);
    check("concat", [&](Tape& t) { return weighted(t, concat_last_dim(t, a, w)); }, w);
    check("slice", [&](Tape& t) { return weighted(t, slice_last_dim(t, a, 1, 3)); }, a);
    check("concat_rows", [&](Tape& t) {
      const std::vector<Tensor> parts = {a, c};
      return weighted(t, concat_rows(t, parts));
    }, c);
    check("gather_rows", [&](Tape& t) { return weighted(t, gather_rows(t, table, ids)); }, table);
    check("select_rows a", [&](Tape& t) { return weighted(t, select_rows(t, pick, a, c)); }, a);
    check("select_rows b", [&](Tape& t) { return weighted(t, select_rows(t, pick, a, c)); }, c);
    check("softmax", [&](Tape& t) { return weighted(t, softmax_rows(t, a)); }, a);
  }
}

TEST(TensorTest, GatherRows) {
  Tape tape(false);
  Tensor table({3, 2}, {0, 1, 2, 3, 4, 5});
  std::vector<int> ids = {2, 0};
  EXPECT_EQ(values(gather_rows(tape, table, ids)), (std::vector<double>{4, 5, 0, 1}));
  std::vector<int> bad = {3};
  EXPECT_THROW(gather_rows(tape, table, bad), IndexError);
  std::vector<int> none;
  EXPECT_EQ(gather_rows(tape, table, none).shape(), (Shape{0, 2}));
}

TEST(TensorTest, NonRecordingTapeStaysEmpty) {
  Tensor x({2}, {1, 2}, true);
  Tape tape(false);
  mul(tape, x, x);
  EXPECT_EQ(tape.size(), 0u);
}

TEST(TensorTest, ForwardIsBitIdentical) {
  Rng rng(9);
  Tensor a = random_tensor(rng, {5, 7});
  Tensor b = random_tensor(rng, {7, 6});
  Tape t1(false), t2(false);
  Tensor r1 = softmax_rows(t1, tanh(t1, matmul(t1, a, b)));
  Tensor r2 = softmax_rows(t2, tanh(t2, matmul(t2, a, b)));
  EXPECT_EQ(values(r1), values(r2));
}

}  // namespace
}  // namespace namerec
