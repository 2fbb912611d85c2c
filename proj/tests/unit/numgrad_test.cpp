// Copyright 2026 The simnet Authors
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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "simnet/numgrad/checkpoint.hpp"
#include "simnet/numgrad/gemm.hpp"
#include "simnet/numgrad/gradcheck.hpp"
#include "simnet/numgrad/layers.hpp"
#include "simnet/numgrad/nn.hpp"
#include "simnet/numgrad/optim.hpp"

namespace simnet::ng {
namespace {

using TD = Tensor<double>;
using TF = Tensor<float>;

TD random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  TD t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

std::vector<double> values(const TD& t) { return {t.data().begin(), t.data().end()}; }

TEST(Tensor, ShapeMustMatchData) {
  EXPECT_THROW(TD({2, 3}, std::vector<double>(5)), DimensionError);
  EXPECT_THROW(TD(Shape{0, 3}), DimensionError);
  TD t({2, 3});
  EXPECT_EQ(t.numel(), 6u);
}

TEST(Layers, ReluExample) {
  TD x({3}, {-1.0, 0.0, 2.0});
  std::vector<TD> in{x};
  TD y = forward<double>(LayerSpec::of(LayerKind::kRelu), in, Mode::kEval);
  EXPECT_EQ(values(y), (std::vector<double>{0.0, 0.0, 2.0}));
}

TEST(Layers, SigmoidOfZeroIsHalf) {
  std::vector<TD> in{TD({1}, {0.0})};
  TD y = forward<double>(LayerSpec::of(LayerKind::kSigmoid), in, Mode::kEval);
  EXPECT_EQ(y.item(), 0.5);
}

TEST(Layers, DropoutEvalIsIdentity) {
  Rng rng(3);
  TD x = random_tensor({4, 5}, rng);
  std::vector<TD> in{x};
  LayerSpec spec = LayerSpec::of(LayerKind::kDropout);
  spec.dropout_rate = 0.3;
  TD y = forward<double>(spec, in, Mode::kEval, &rng);
  EXPECT_EQ(values(y), values(x));
}

TEST(Layers, DropoutTrainScalesSurvivors) {
  Rng rng(4);
  TD x = TD::full({200, 10}, 1.0);
  std::vector<TD> in{x};
  LayerSpec spec = LayerSpec::of(LayerKind::kDropout);
  TD y = forward<double>(spec, in, Mode::kTrain, &rng);
  std::size_t zeros = 0;
  for (double v : y.data()) {
    if (v == 0.0) {
      ++zeros;
    } else {
      EXPECT_DOUBLE_EQ(v, 1.0 / 0.7);
    }
  }
  EXPECT_NEAR(static_cast<double>(zeros) / 2000.0, 0.3, 0.04);
}

TEST(Layers, InvalidHyperparameters) {
  LayerSpec d = LayerSpec::of(LayerKind::kDropout);
  d.dropout_rate = 1.0;
  EXPECT_THROW(d.validate(), ContractError);
  LayerSpec bn = LayerSpec::of(LayerKind::kBatchNorm);
  bn.batchnorm.eps = 0.0;
  EXPECT_THROW(bn.validate(), ContractError);
}

TEST(Layers, AffineShapeMismatchNamesShapes) {
  std::vector<TD> in{TD({2, 3}), TD({4, 5}), TD({5})};
  try {
    forward<double>(LayerSpec::affine(3, 5), in, Mode::kEval);
    FAIL();
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("[4, 5]"), std::string::npos) << e.what();
  }
}

TEST(Layers, NonFiniteInputRejected) {
  std::vector<TD> in{TD({2}, {1.0, std::nan("")})};
  EXPECT_THROW(forward<double>(LayerSpec::of(LayerKind::kRelu), in, Mode::kEval), NumericError);
}

TEST(SetMaxPool, ColumnwiseMax) {
  TD x({2, 2}, {1, 5, 3, 2});
  EXPECT_EQ(values(set_max_pool(x)), (std::vector<double>{3, 5}));
  TD single({1, 3}, {7, -2, 0});
  EXPECT_EQ(values(set_max_pool(single)), (std::vector<double>{7, -2, 0}));
}

TEST(SetMaxPool, PermutationInvariant) {
  Rng rng(11);
  TD x = random_tensor({37, 9}, rng);
  std::vector<std::size_t> perm(37);
  std::iota(perm.begin(), perm.end(), 0);
  for (int trial = 0; trial < 20; ++trial) {
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    TD px({37, 9});
    for (std::size_t r = 0; r < 37; ++r) {
      std::copy_n(x.data().begin() + perm[r] * 9, 9, px.data().begin() + r * 9);
    }
    EXPECT_EQ(values(set_max_pool(px)), values(set_max_pool(x)));
  }
}

TEST(SetMaxPool, TiesRouteToLowestRow) {
  TD x({3, 1}, {2.0, 2.0, 1.0});
  x.set_requires_grad(true);
  backward(sum(set_max_pool(x)));
  EXPECT_EQ(std::vector<double>(x.grad().begin(), x.grad().end()),
            (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(Loss, Examples) {
  const std::vector<int> one{1}, zero{0};
  EXPECT_NEAR(bce_loss(TD({1}, {0.5}), one).item(), std::log(2.0), 1e-12);
  EXPECT_NEAR(softmax_ce_loss(TD({1, 2}, {0.0, 0.0}), zero).item(), std::log(2.0), 1e-12);
  EXPECT_NEAR(bce_loss(TD({1}, {1.0 - 1e-7}), one).item(), 1e-7, 1e-9);
  EXPECT_LE(bce_loss(TD({1}, {1.0}), one).item(), 1e-6);
  EXPECT_LE(bce_loss(TD({1}, {0.0}), zero).item(), 1e-6);
}

TEST(Loss, LabelOutOfRange) {
  const std::vector<int> bad{2};
  EXPECT_THROW(bce_loss(TD({1}, {0.5}), bad), LabelError);
  EXPECT_THROW(softmax_ce_loss(TD({1, 2}, {0.0, 0.0}), bad), LabelError);
  const std::vector<int> neg{-1};
  EXPECT_THROW(softmax_ce_loss(TD({1, 2}, {0.0, 0.0}), neg), LabelError);
}

TEST(Loss, NonNegative) {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    TD logits = random_tensor({4, 3}, rng, -5, 5);
    std::vector<int> labels{0, 1, 2, 1};
    EXPECT_GE(softmax_ce_loss(logits, labels).item(), 0.0);
    TD probs = random_tensor({4}, rng, 0, 1);
    std::vector<int> bin{0, 1, 1, 0};
    EXPECT_GE(bce_loss(probs, bin).item(), 0.0);
  }
}

TEST(Backward, Square) {
  TD w({1}, {3.0});
  w.set_requires_grad(true);
  backward(mul(w, w));
  EXPECT_EQ(w.grad()[0], 6.0);
}

TEST(Backward, Product) {
  TD a({1}, {2.0}), b({1}, {5.0});
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  backward(mul(a, b));
  EXPECT_EQ(a.grad()[0], 5.0);
  EXPECT_EQ(b.grad()[0], 2.0);
}

TEST(Backward, NonScalarRootRejected) {
  TD a({2}, {1.0, 2.0});
  a.set_requires_grad(true);
  EXPECT_THROW(backward(scale(a, 2.0)), ContractError);
}

// Independent oracle: a 2-layer MLP evaluated with plain loops, differentiated
// by central differences on the raw parameter arrays.
struct PlainMlp {
  std::size_t n, in, hidden, out;
  std::vector<double> x, w1, b1, w2, b2;

  double loss() const {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      std::vector<double> h(hidden);
      for (std::size_t j = 0; j < hidden; ++j) {
        double s = b1[j];
        for (std::size_t i = 0; i < in; ++i) s += x[r * in + i] * w1[i * hidden + j];
        h[j] = std::max(s, 0.0);
      }
      for (std::size_t k = 0; k < out; ++k) {
        double s = b2[k];
        for (std::size_t j = 0; j < hidden; ++j) s += h[j] * w2[j * out + k];
        total += std::tanh(s) * std::tanh(s) + 0.5 * s;
      }
    }
    return total / static_cast<double>(n);
  }
};

TEST(Backward, TwoLayerMlpMatchesFiniteDifferences) {
  Rng rng(2024);
  PlainMlp mlp{6, 5, 7, 3, {}, {}, {}, {}, {}};
  auto fill = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (auto& e : v) e = rng.uniform(-1.0, 1.0);
  };
  fill(mlp.x, 30);
  fill(mlp.w1, 35);
  fill(mlp.b1, 7);
  fill(mlp.w2, 21);
  fill(mlp.b2, 3);

  TD x({6, 5}, mlp.x), w1({5, 7}, mlp.w1), b1({7}, mlp.b1), w2({7, 3}, mlp.w2),
      b2({3}, mlp.b2);
  for (TD* p : {&w1, &b1, &w2, &b2}) p->set_requires_grad(true);
  TD s = linear(relu(linear(x, w1, b1)), w2, b2);
  TD th = sub(scale(sigmoid(scale(s, 2.0)), 2.0), TD::full(s.shape(), 1.0));  // tanh
  TD per = add(square(th), scale(s, 0.5));
  backward(scale(sum(per), 1.0 / 6.0));

  const double h = 1e-6;
  double worst = 0.0;
  std::vector<std::pair<std::vector<double>*, TD*>> pairs{
      {&mlp.w1, &w1}, {&mlp.b1, &b1}, {&mlp.w2, &w2}, {&mlp.b2, &b2}};
  for (auto& [raw, tensor] : pairs) {
    for (std::size_t i = 0; i < raw->size(); ++i) {
      const double v0 = (*raw)[i];
      (*raw)[i] = v0 + h;
      const double fp = mlp.loss();
      (*raw)[i] = v0 - h;
      const double fm = mlp.loss();
      (*raw)[i] = v0;
      const double numeric = (fp - fm) / (2 * h);
      const double analytic = tensor->grad()[i];
      const double err =
          std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-2});
      worst = std::max(worst, err);
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Backward, GradientsAccumulateAcrossCalls) {
  TD w({1}, {3.0});
  w.set_requires_grad(true);
  backward(mul(w, w));
  backward(mul(w, w));
  EXPECT_EQ(w.grad()[0], 12.0);
}

TEST(Backward, DiamondGraph) {
  TD a({1}, {1.5});
  a.set_requires_grad(true);
  TD b = scale(a, 2.0);
  backward(add(mul(b, b), b));  // 4a^2 + 2a
  EXPECT_DOUBLE_EQ(a.grad()[0], 8 * 1.5 + 2);
}

TEST(Gemm, RowsMatchesNaive) {
  Rng rng(9);
  for (auto [n, k, p] : {std::tuple{1, 1, 1}, {5, 3, 70}, {17, 33, 129}, {64, 128, 256}}) {
    std::vector<double> x(n * k), w(k * p), b(p), y(n * p);
    for (auto& v : x) v = rng.uniform(-1, 1);
    for (auto& v : w) v = rng.uniform(-1, 1);
    for (auto& v : b) v = rng.uniform(-1, 1);
    gemm_rows<double>(n, k, p, x.data(), w.data(), b.data(), y.data());
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < p; ++c) {
        double s = b[c];
        for (int i = 0; i < k; ++i) s += x[r * k + i] * w[i * p + c];
        ASSERT_NEAR(y[r * p + c], s, 1e-12);
      }
    }
  }
}

TEST(Gemm, RowResultIndependentOfPosition) {
  Rng rng(10);
  const std::size_t k = 67, p = 150;
  std::vector<float> w(k * p), b(p, 0.25f), row(k);
  for (auto& v : w) v = static_cast<float>(rng.uniform(-1, 1));
  for (auto& v : row) v = static_cast<float>(rng.uniform(-1, 1));
  std::vector<float> single(p);
  gemm_rows<float>(1, k, p, row.data(), w.data(), b.data(), single.data());
  for (std::size_t n : {2u, 5u, 9u, 13u}) {
    for (std::size_t at = 0; at < n; ++at) {
      std::vector<float> x(n * k);
      for (auto& v : x) v = static_cast<float>(rng.uniform(-1, 1));
      std::copy(row.begin(), row.end(), x.begin() + at * k);
      std::vector<float> y(n * p);
      gemm_rows<float>(n, k, p, x.data(), w.data(), b.data(), y.data());
      ASSERT_TRUE(std::equal(single.begin(), single.end(), y.begin() + at * p))
          << "n=" << n << " at=" << at;
    }
  }
}

TEST(Adam, ZeroGradNoDecayLeavesParameters) {
  ParameterStore<double> store(1);
  TD& w = store.add_parameter("w", {3}, Init::kKaimingUniform, 3);
  const auto before = values(w);
  AdamState<double> state;
  state.config.weight_decay = 0.0;
  w.zero_grad();
  adam_step(store, state, 0.001);
  EXPECT_EQ(values(w), before);
}

TEST(Adam, FirstStepIsLrTimesSign) {
  ParameterStore<double> store;
  TD& w = store.add_parameter("w", {1}, Init::kZeros);
  w.zero_grad();
  w.grad()[0] = 1.0;
  AdamState<double> state;
  state.config.weight_decay = 0.0;
  adam_step(store, state, 0.001);
  EXPECT_NEAR(w.data()[0], -0.001, 1e-9);
}

TEST(Adam, CoupledDecayShrinksPositiveWeights) {
  ParameterStore<double> store;
  TD& w = store.add_parameter("w", {1}, Init::kOnes);
  w.zero_grad();
  AdamState<double> state;
  adam_step(store, state, 0.001);
  EXPECT_LT(w.data()[0], 1.0);
}

TEST(Adam, MissingGradNamesParameter) {
  ParameterStore<double> store;
  store.add_parameter("encoder.fc1.weight", {2}, Init::kZeros);
  AdamState<double> state;
  try {
    adam_step(store, state, 0.001);
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("encoder.fc1.weight"), std::string::npos);
  }
}

TEST(Adam, SecondMomentNonNegative) {
  ParameterStore<double> store(2);
  TD& w = store.add_parameter("w", {10}, Init::kKaimingUniform, 10);
  AdamState<double> state;
  Rng rng(3);
  for (int s = 0; s < 20; ++s) {
    w.zero_grad();
    for (auto& g : w.grad()) g = rng.normal();
    adam_step(store, state, 0.01);
  }
  for (double v : state.v["w"]) EXPECT_GE(v, 0.0);
  EXPECT_EQ(state.m["w"].size(), 10u);
}

TEST(StepLr, Examples) {
  EXPECT_EQ(step_lr(0, 0.001), 0.001);
  EXPECT_DOUBLE_EQ(step_lr(20, 0.001), 0.0007);
  EXPECT_DOUBLE_EQ(step_lr(40, 0.001), 0.00049);
  EXPECT_EQ(step_lr(19, 0.001), 0.001);
  // Decimal literals are honoured: 0.001 * 0.7^4 is the double nearest 0.0002401.
  EXPECT_EQ(step_lr(80, 0.001), 0.0002401);
  EXPECT_EQ(step_lr(60, 0.01, 20, 0.5), 0.00125);
}

TEST(StepLr, WithinOneUlpOfExtendedPrecision) {
  // Second route: repeated multiplication of the literals in long double.
  for (double base : {0.001, 0.01, 3e-4, 0.1}) {
    for (double gamma : {0.7, 0.5, 0.9, 0.33}) {
      long double want = base == 0.001 ? 0.001L : base == 0.01 ? 0.01L : base == 3e-4 ? 3e-4L : 0.1L;
      const long double g = gamma == 0.7 ? 0.7L : gamma == 0.5 ? 0.5L : gamma == 0.9 ? 0.9L : 0.33L;
      for (std::size_t k = 0; k < 12; ++k, want *= g) {
        const double got = step_lr(k * 20, base, 20, gamma);
        const double w = static_cast<double>(want);
        EXPECT_LE(std::abs(got - w), std::abs(std::nextafter(w, 0.0) - w))
            << base << " " << gamma << " " << k;
      }
    }
  }
}

TEST(StepLr, PiecewiseConstantAndNonIncreasing) {
  for (std::size_t e = 1; e < 200; ++e) {
    const double prev = step_lr(e - 1, 0.001), cur = step_lr(e, 0.001);
    EXPECT_LE(cur, prev);
    if (e % 20 != 0) {
      EXPECT_EQ(cur, prev);
    } else {
      EXPECT_LT(cur, prev);
    }
  }
}

TEST(ParameterStore, LexicographicAndUnique) {
  ParameterStore<float> store(7);
  store.add_parameter("b.weight", {2, 2}, Init::kKaimingUniform, 2);
  store.add_parameter("a.weight", {2, 2}, Init::kKaimingUniform, 2);
  store.add_buffer("a.running_mean", {2}, 0.0f);
  std::vector<std::string> names;
  for (const auto& [n, t] : store.entries()) names.push_back(n);
  EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
  EXPECT_THROW(store.add_parameter("a.weight", {1}, Init::kZeros), ContractError);
  EXPECT_EQ(store.parameter_names().size(), 2u);
}

TEST(ParameterStore, InitIndependentOfInsertionOrder) {
  ParameterStore<float> a(7), b(7);
  a.add_parameter("x", {4}, Init::kKaimingUniform, 4);
  a.add_parameter("y", {4}, Init::kKaimingUniform, 4);
  b.add_parameter("y", {4}, Init::kKaimingUniform, 4);
  b.add_parameter("x", {4}, Init::kKaimingUniform, 4);
  for (const char* n : {"x", "y"}) {
    EXPECT_TRUE(std::ranges::equal(a.at(n).data(), b.at(n).data()));
    for (float v : a.at(n).data()) EXPECT_LE(std::abs(v), std::sqrt(6.0f / 4.0f));
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  ParameterStore<float> store(3);
  Linear<float> fc(store, "fc", 5, 4);
  BatchNorm<float> bn(store, "bn", 4);
  const auto path = std::filesystem::temp_directory_path() / "simnet_ckpt_test.simng";
  save_parameters(store, path);
  ParameterStore<float> other(99);
  Linear<float> fc2(other, "fc", 5, 4);
  BatchNorm<float> bn2(other, "bn", 4);
  load_parameters(other, path);
  for (const auto& [name, t] : store.entries()) {
    EXPECT_TRUE(std::ranges::equal(t.data(), other.at(name).data())) << name;
  }
  ParameterStore<float> wrong;
  Linear<float> fc3(wrong, "fc", 5, 3);
  EXPECT_THROW(load_parameters(wrong, path), Error);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsBadMagic) {
  const auto path = std::filesystem::temp_directory_path() / "simnet_bad.simng";
  {
    std::ofstream out(path, std::ios::binary);
    out << "XXXXXX\x01";
  }
  EXPECT_THROW(read_checkpoint(path), FormatError);
  std::filesystem::remove(path);
}

TEST(BatchNorm, TrainNormalizesEvalUsesRunningStats) {
  ParameterStore<double> store;
  BatchNorm<double> bn(store, "bn", 2);
  TD x({4, 2}, {1, 10, 2, 20, 3, 30, 4, 40});
  TD y = bn(x, Mode::kTrain);
  double m0 = 0, m1 = 0;
  for (int r = 0; r < 4; ++r) {
    m0 += y.data()[r * 2];
    m1 += y.data()[r * 2 + 1];
  }
  EXPECT_NEAR(m0, 0.0, 1e-12);
  EXPECT_NEAR(m1, 0.0, 1e-12);
  EXPECT_NEAR(bn.running_mean.data()[0], 0.1 * 2.5, 1e-12);
  EXPECT_NEAR(bn.running_var.data()[1], 0.9 + 0.1 * (500.0 / 3.0), 1e-9);
  TD e1 = bn(x, Mode::kEval), e2 = bn(x, Mode::kEval);
  EXPECT_EQ(values(e1), values(e2));
}

// Every layer kind against central differences through the library's own
// checker; the Backward.TwoLayerMlp test above pins that checker to an
// independent oracle.
class LayerGrad : public ::testing::TestWithParam<LayerKind> {};

TEST_P(LayerGrad, MatchesFiniteDifferences) {
  const LayerKind kind = GetParam();
  Rng rng(static_cast<std::uint64_t>(kind) + 100);
  LayerSpec spec = LayerSpec::of(kind);
  std::vector<TD> inputs;
  std::vector<TD> wrt;
  TD running_mean, running_var;
  switch (kind) {
    case LayerKind::kAffine:
      spec = LayerSpec::affine(4, 3);
      inputs = {random_tensor({5, 4}, rng), random_tensor({4, 3}, rng), random_tensor({3}, rng)};
      wrt = inputs;
      break;
    case LayerKind::kBatchNorm:
      running_mean = TD({3});
      running_var = TD::full({3}, 1.0);
      inputs = {random_tensor({6, 3}, rng), random_tensor({3}, rng, 0.5, 1.5),
                random_tensor({3}, rng), running_mean, running_var};
      wrt = {inputs[0], inputs[1], inputs[2]};
      break;
    case LayerKind::kConv2d:
      inputs = {random_tensor({2, 5, 4, 2}, rng), random_tensor({18, 3}, rng),
                random_tensor({3}, rng)};
      wrt = inputs;
      break;
    case LayerKind::kGlobalAvgPool:
      inputs = {random_tensor({2, 3, 3, 4}, rng)};
      wrt = inputs;
      break;
    case LayerKind::kConcat:
      inputs = {random_tensor({3, 2}, rng), random_tensor({3, 4}, rng)};
      wrt = inputs;
      break;
    case LayerKind::kDropout:
      spec.dropout_rate = 0.3;
      inputs = {random_tensor({4, 5}, rng)};
      wrt = inputs;
      break;
    default:
      inputs = {random_tensor({5, 4}, rng, -2, 2)};
      wrt = inputs;
      break;
  }
  auto f = [&]() {
    Rng drop(77);  // same mask on every evaluation
    TD y = forward<double>(spec, inputs, Mode::kTrain, &drop);
    TD w = TD(y.shape());
    Rng wr(5);
    for (auto& v : w.data()) v = wr.uniform(-1, 1);
    return sum(mul(y, w));
  };
  GradCheckReport report = gradcheck(f, wrt);
  EXPECT_LT(report.max_rel_error, 1e-6) << to_string(kind) << " worst " << report.worst;
  EXPECT_GT(report.checked, 0u);
}

INSTANTIATE_TEST_SUITE_P(AllKinds, LayerGrad,
                         ::testing::Values(LayerKind::kAffine, LayerKind::kRelu,
                                           LayerKind::kSigmoid, LayerKind::kSoftmax,
                                           LayerKind::kBatchNorm, LayerKind::kDropout,
                                           LayerKind::kConv2d, LayerKind::kGlobalAvgPool,
                                           LayerKind::kSetMaxPool, LayerKind::kConcat),
                         [](const auto& info) { return to_string(info.param); });

TEST(OpsGrad, RemainingOps) {
  Rng rng(31);
  TD a = random_tensor({2, 3, 4, 2}, rng);
  TD q = random_tensor({2, 4}, rng), k = random_tensor({6, 4}, rng), v = random_tensor({6, 4}, rng);
  TD m = random_tensor({6, 3}, rng), g = random_tensor({6, 2}, rng);
  TD p = random_tensor({3}, rng, 0.05, 0.95), logits = random_tensor({3, 4}, rng);
  const std::vector<int> bin{0, 1, 1}, cls{3, 0, 2};
  auto f = [&]() {
    TD pooled = reshape(avg_pool2(a), {2, 4});
    TD att = attention(q, k, v, 3).output;
    TD grouped = group_matmul(slice_cols(m, 0, 2), transpose(reshape(g, {2, 6})), 3);
    TD terms = concat_cols<double>({pooled, att});
    return add(add(add(sum(square(terms)), mean(grouped)),
                   add(orthogonality_penalty(reshape(m, {6, 3}), 3), bce_loss(p, bin))),
               softmax_ce_loss(logits, cls));
  };
  GradCheckReport report = gradcheck(f, {a, q, k, v, m, g, p, logits});
  EXPECT_LT(report.max_rel_error, 1e-6) << report.worst;
  EXPECT_EQ(report.skipped, 0u);
}

TEST(Gradcheck, SkipsReluKinks) {
  TD x({3}, {0.0, 1.0, -1.0});
  GradCheckReport report = gradcheck([&] { return sum(relu(x)); }, {x});
  EXPECT_EQ(report.skipped, 1u);
  EXPECT_EQ(report.checked, 2u);
  EXPECT_LT(report.max_rel_error, 1e-8);
}

TEST(Ops, AttentionSingleTokenWeightIsOne) {
  Rng rng(12);
  TD q = random_tensor({3, 4}, rng), k = random_tensor({3, 4}, rng), v = random_tensor({3, 4}, rng);
  auto res = attention(q, k, v, 1);
  for (double w : res.weights.data()) EXPECT_EQ(w, 1.0);
  EXPECT_EQ(values(res.output), values(v));
}

TEST(Ops, OrthogonalityPenalty) {
  TD a({3, 3}, {2, 0, 0, 0, 2, 0, 0, 0, 2});
  EXPECT_DOUBLE_EQ(orthogonality_penalty(a, 3).item(), 27.0);
  TD id({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  EXPECT_EQ(orthogonality_penalty(id, 3).item(), 0.0);
}

}  // namespace
}  // namespace simnet::ng
