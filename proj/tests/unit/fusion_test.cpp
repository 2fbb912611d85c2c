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
#include <numeric>

#include "simnet/fusion/fusion.hpp"
#include "simnet/numgrad/gradcheck.hpp"

namespace simnet::fusion {
namespace {

template <typename T>
Tensor<T> random_tensor(ng::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename T>
ModelInputs<T> random_inputs(const ModelConfig& cfg, std::size_t batch, std::size_t points,
                             Rng& rng) {
  ModelInputs<T> in;
  const std::size_t s = cfg.image.input_size;
  in.images = random_tensor<T>({batch, s, s, 3}, rng, 0, 1);
  in.clouds = random_tensor<T>({batch * points, cfg.point.dims}, rng);
  in.points = points;
  const std::size_t cs = cfg.ccm_image.input_size;
  in.ccm_images = random_tensor<T>({batch, cs, cs, 3}, rng, 0, 1);
  return in;
}

template <typename T>
void scramble(ParameterStore<T>& store, Rng& rng) {
  for (auto& [name, t] : store.entries()) {
    const bool var = name.find("running_var") != std::string::npos;
    for (auto& v : t.data()) {
      v = var ? static_cast<T>(rng.uniform(0.5, 2.0)) : static_cast<T>(v + rng.uniform(-0.3, 0.3));
    }
  }
}

template <typename T>
std::vector<T> vec(const Tensor<T>& t) {
  return {t.data().begin(), t.data().end()};
}

TEST(Variants, NamesRoundTrip) {
  for (ModelVariant v : all_variants()) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_EQ(parse_fusion_key("bca"), ModelVariant::kSimnetBca);
  EXPECT_EQ(parse_fusion_key("ccm"), ModelVariant::kCcmFusion);
  EXPECT_THROW(parse_variant("resnet"), ConfigError);
  EXPECT_THROW(parse_fusion_key("sum"), ConfigError);
}

TEST(DimensionContracts, DefaultSizes) {
  Rng rng(1);
  for (ModelVariant v : all_variants()) {
    ModelConfig cfg;
    cfg.variant = v;
    Model<float> model(cfg, 2);
    auto in = random_inputs<float>(cfg, 2, 32, rng);
    auto out = model.forward(in, ng::Mode::kEval);
    if (cfg.uses_image()) {
      EXPECT_EQ(out.image_features.dim(1), 2048u);
    }
    if (cfg.uses_cloud()) {
      EXPECT_EQ(out.cloud_global.dim(1), 1024u);
    }
    switch (v) {
      case ModelVariant::kSimnetConcat:
        EXPECT_EQ(out.cloud_projected.dim(1), 8u);
        EXPECT_EQ(out.fused.dim(1), 2056u);
        break;
      case ModelVariant::kSimnetBca:
        EXPECT_EQ(out.fused.dim(1), 1024u);
        break;
      case ModelVariant::kSimnetCaPc2Img:
      case ModelVariant::kSimnetCaImg2Pc:
        EXPECT_EQ(out.fused.dim(1), 512u);
        break;
      case ModelVariant::kCcmFusion:
        EXPECT_EQ(out.ccm_features.dim(1), 256u);
        EXPECT_EQ(out.fused.dim(1), 2304u);
        break;
      default:
        break;
    }
    EXPECT_EQ(out.fused.dim(1), cfg.fused_size());
    EXPECT_EQ(out.probs.shape(), (ng::Shape{2, 1}));
  }
}

TEST(CloudProjection, Examples) {
  ParameterStore<double> store;
  CloudProjection<double> proj(store, "p", 1024, 8);
  Rng rng(3);
  EXPECT_EQ(proj(random_tensor<double>({2, 1024}, rng)).shape(), (ng::Shape{2, 8}));
  for (auto& v : proj.fc.weight.data()) v = 0;
  const Tensor<double> zero = proj(random_tensor<double>({1, 1024}, rng));
  for (double v : zero.data()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(proj(random_tensor<double>({1, 1000}, rng)), DimensionError);
}

TEST(ConcatFuse, OrderAndSize) {
  Tensor<double> a({1, 2}, {1, 2}), b({1, 3}, {7, 8, 9});
  EXPECT_EQ(vec(concat_fuse(a, b)), (std::vector<double>{1, 2, 7, 8, 9}));
  EXPECT_EQ(vec(ccm_fuse(b, a)), (std::vector<double>{7, 8, 9, 1, 2}));
  Tensor<float> i({1, 2048}), p({1, 8}), c({1, 256});
  EXPECT_EQ(concat_fuse(i, p).dim(1), 2056u);
  EXPECT_EQ(ccm_fuse(i, c).dim(1), 2304u);
  const Tensor<float> fused = concat_fuse(i, p);
  for (float v : fused.data()) EXPECT_EQ(v, 0.0f);
  EXPECT_THROW(concat_fuse(Tensor<float>({2, 3}), Tensor<float>({1, 3})), DimensionError);
}

TEST(Head, SigmoidAndSoftmax) {
  Rng rng(4);
  ParameterStore<double> store;
  Head<double> head(store, "h", 6, {5, 4}, 1, 0.3);
  for (auto& v : store.at("h.out.weight").data()) v = 0;
  Tensor<double> x = random_tensor<double>({3, 6}, rng);
  const Tensor<double> p = probabilities(head.forward(x, ng::Mode::kEval, rng));
  for (double v : p.data()) EXPECT_EQ(v, 0.5);

  ParameterStore<double> store3(5);
  Head<double> head3(store3, "h", 6, {5, 4}, 3, 0.3);
  const Tensor<double> p3 = probabilities(head3.forward(x, ng::Mode::kEval, rng));
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_NEAR(p3.data()[r * 3] + p3.data()[r * 3 + 1] + p3.data()[r * 3 + 2], 1.0, 1e-6);
  }
  EXPECT_EQ(vec(head3.forward(x, ng::Mode::kEval, rng)), vec(head3.forward(x, ng::Mode::kEval, rng)));
}

TEST(CrossAttention, SingleTokenCollapses) {
  Rng rng(6);
  ParameterStore<double> store(7);
  CrossAttention<double> att(store, "a", 5);
  for (int draw = 0; draw < 20; ++draw) {
    scramble(store, rng);
    Tensor<double> q = random_tensor<double>({4, 5}, rng), kv = random_tensor<double>({4, 5}, rng);
    auto out = att.forward(q, kv);
    for (double w : out.weights.data()) EXPECT_EQ(w, 1.0);
    const Tensor<double> expected = att.output_proj(att.value_proj(kv));
    for (std::size_t i = 0; i < expected.numel(); ++i) {
      EXPECT_NEAR(out.output.data()[i], expected.data()[i], 1e-12);
    }
    // The query never reaches the output through a singleton softmax.
    auto other = att.forward(random_tensor<double>({4, 5}, rng), kv);
    EXPECT_EQ(vec(other.output), vec(out.output));
  }
}

TEST(CrossAttention, IdentityProjectionsReturnKvToken) {
  ParameterStore<double> store;
  CrossAttention<double> att(store, "a", 3);
  for (auto* lin : {&att.value_proj, &att.output_proj}) {
    auto w = lin->weight.data();
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < 3; ++i) w[i * 3 + i] = 1.0;
  }
  Tensor<double> q({1, 3}, {5, 6, 7}), kv({1, 3}, {0.25, -1.5, 3});
  EXPECT_EQ(vec(att.forward(q, kv).output), vec(kv));
}

TEST(Model, PermutationInvariantAllVariants) {
  Rng rng(8);
  for (ModelVariant v : all_variants()) {
    for (std::size_t dims : {3u, 6u}) {
      ModelConfig cfg = tiny_config(v, dims);
      cfg.point.use_feature_transform = true;
      cfg.point.use_input_transform = true;
      Model<float> model(cfg, 9);
      scramble(model.store(), rng);
      auto in = random_inputs<float>(cfg, 3, 20, rng);
      const auto a = vec(model.forward(in, ng::Mode::kEval).probs);
      ModelInputs<float> perm = in;
      perm.clouds = Tensor<float>(in.clouds.shape());
      std::vector<std::size_t> order(20);
      for (std::size_t b = 0; b < 3; ++b) {
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = 19; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
        for (std::size_t i = 0; i < 20; ++i) {
          std::copy_n(in.clouds.data().begin() + (b * 20 + order[i]) * dims, dims,
                      perm.clouds.data().begin() + (b * 20 + i) * dims);
        }
      }
      EXPECT_EQ(vec(model.forward(perm, ng::Mode::kEval).probs), a) << to_string(v);
    }
  }
}

TEST(Model, TinyGradcheckAllVariants) {
  Rng rng(10);
  for (ModelVariant v : all_variants()) {
    for (std::size_t classes : {2u, 3u}) {
      ModelConfig cfg = tiny_config(v);
      cfg.classes = classes;
      cfg.point.use_feature_transform = true;
      Model<double> model(cfg, 11);
      scramble(model.store(), rng);
      auto in = random_inputs<double>(cfg, 4, 6, rng);
      std::vector<int> labels{0, 1, 1, 0};
      if (classes == 3) labels = {0, 2, 1, 2};
      std::vector<Tensor<double>> wrt;
      for (const auto& name : model.store().parameter_names()) wrt.push_back(model.store().at(name));
      if (cfg.uses_cloud()) wrt.push_back(in.clouds);
      auto f = [&] {
        model.set_dropout_seed(123);
        return model.loss(model.forward(in, ng::Mode::kTrain), labels);
      };
      ng::GradCheckOptions opt;
      opt.max_coords_per_tensor = 10;
      auto report = ng::gradcheck(f, wrt, opt);
      EXPECT_LT(report.max_rel_error, 1e-6) << to_string(v) << " worst " << report.worst;
      EXPECT_GT(report.checked, 50u);
    }
  }
}

TEST(Model, LossRejectsForeignLabels) {
  ModelConfig cfg = tiny_config(ModelVariant::kImageOnly);
  Model<double> model(cfg, 12);
  Rng rng(13);
  auto out = model.forward(random_inputs<double>(cfg, 2, 4, rng), ng::Mode::kEval);
  std::vector<int> bad{0, 2};
  EXPECT_THROW(model.loss(out, bad), LabelError);
}

TEST(Model, EvalTwiceIdentical) {
  ModelConfig cfg = tiny_config(ModelVariant::kSimnetConcat);
  Model<float> model(cfg, 14);
  Rng rng(15);
  auto in = random_inputs<float>(cfg, 2, 9, rng);
  EXPECT_EQ(vec(model.forward(in, ng::Mode::kEval).probs),
            vec(model.forward(in, ng::Mode::kEval).probs));
}

}  // namespace
}  // namespace simnet::fusion
