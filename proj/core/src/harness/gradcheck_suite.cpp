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

#include "simnet/harness/gradcheck_suite.hpp"

#include "simnet/encoders/encoders.hpp"
#include "simnet/fusion/fusion.hpp"
#include "simnet/numgrad/layers.hpp"
#include "simnet/numgrad/ops.hpp"

namespace simnet::harness {

namespace {

using ng::Tensor;
using TD = Tensor<double>;
using ng::LayerKind;

TD random_tensor(ng::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  TD t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Moves parameters off their initial values (zero-initialized T-Net outputs,
// unit batch-norm scales) so every path carries gradient.
void perturb(ng::ParameterStore<double>& store, Rng& rng) {
  for (auto& [name, t] : store.entries()) {
    const bool var = name.find("running_var") != std::string::npos;
    for (auto& v : t.data()) v = var ? rng.uniform(0.5, 2.0) : v + rng.uniform(-0.3, 0.3);
  }
}

// Random linear readout so a non-scalar output becomes a scalar objective.
TD readout(const TD& y, std::uint64_t seed) {
  TD w(y.shape());
  Rng r(seed);
  for (auto& v : w.data()) v = r.uniform(-1, 1);
  return ng::sum(ng::mul(y, w));
}

BlockResult layer_block(LayerKind kind, std::uint64_t seed) {
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(kind)));
  ng::LayerSpec spec = ng::LayerSpec::of(kind);
  std::vector<TD> inputs, wrt;
  switch (kind) {
    case LayerKind::kAffine:
      spec = ng::LayerSpec::affine(4, 3);
      inputs = {random_tensor({5, 4}, rng), random_tensor({4, 3}, rng), random_tensor({3}, rng)};
      wrt = inputs;
      break;
    case LayerKind::kBatchNorm:
      inputs = {random_tensor({6, 3}, rng), random_tensor({3}, rng, 0.5, 1.5),
                random_tensor({3}, rng), TD({3}), TD::full({3}, 1.0)};
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
    default:
      inputs = {random_tensor({5, 4}, rng, -2, 2)};
      wrt = inputs;
      break;
  }
  auto f = [&] {
    Rng drop(seed + 77);
    return readout(ng::forward<double>(spec, inputs, ng::Mode::kTrain, &drop), seed + 5);
  };
  return {"layer." + ng::to_string(kind), ng::gradcheck(f, wrt)};
}

BlockResult sigmoid_block(std::uint64_t seed) {
  Rng rng(seed + 1);
  TD x = random_tensor({2, 3}, rng, -3, 3);
  auto f = [&] { return readout(ng::sigmoid(x), seed + 2); };
  return {"sigmoid", ng::gradcheck(f, {x}), 1e-8};
}

BlockResult ops_block(std::uint64_t seed) {
  Rng rng(seed + 3);
  TD q = random_tensor({2, 4}, rng), k = random_tensor({6, 4}, rng), v = random_tensor({6, 4}, rng);
  TD m = random_tensor({6, 3}, rng), g = random_tensor({6, 2}, rng);
  TD p = random_tensor({3}, rng, 0.05, 0.95), logits = random_tensor({3, 4}, rng);
  const std::vector<int> bin{0, 1, 1}, cls{3, 0, 2};
  auto f = [&] {
    TD att = ng::attention(q, k, v, 3).output;
    TD grouped = ng::group_matmul(ng::slice_cols(m, 0, 2), ng::transpose(ng::reshape(g, {2, 6})), 3);
    return ng::add(ng::add(ng::add(readout(att, seed), ng::mean(grouped)),
                           ng::add(ng::orthogonality_penalty(m, 3), ng::bce_loss(p, bin))),
                   ng::softmax_ce_loss(logits, cls));
  };
  return {"ops.attention+losses", ng::gradcheck(f, {q, k, v, m, g, p, logits})};
}

BlockResult point_encoder_block(std::size_t dims, std::uint64_t seed) {
  auto cfg = enc::PointEncoderConfig::defaults(dims);
  cfg.widths = {4, 8, 16};
  cfg.use_input_transform = true;
  cfg.use_feature_transform = true;
  cfg.tnet_widths = {4, 8};
  cfg.tnet_head = {6};
  ng::ParameterStore<double> store(seed + 11);
  enc::PointEncoder<double> encoder(store, "pe", cfg);
  Rng rng(seed + 12);
  perturb(store, rng);
  TD clouds = random_tensor({3 * 7, dims}, rng);
  std::vector<TD> wrt{clouds};
  for (const auto& name : store.parameter_names()) wrt.push_back(store.at(name));
  auto f = [&] {
    auto out = encoder.forward(clouds, 7, ng::Mode::kTrain);
    return ng::add(readout(out.global, seed + 13), out.regularizer);
  };
  ng::GradCheckOptions opt;
  opt.max_coords_per_tensor = 12;
  return {"encoder.point.d" + std::to_string(dims), ng::gradcheck(f, wrt, opt)};
}

BlockResult image_encoder_block(std::uint64_t seed) {
  enc::ImageEncoderConfig cfg{8, {2, 3, 4}, 5};
  ng::ParameterStore<double> store(seed + 21);
  enc::ImageEncoder<double> encoder(store, "ie", cfg);
  Rng rng(seed + 22);
  perturb(store, rng);
  TD img = random_tensor({2, 8, 8, 3}, rng, 0, 1);
  std::vector<TD> wrt{img};
  for (const auto& name : store.parameter_names()) wrt.push_back(store.at(name));
  auto f = [&] { return readout(encoder.forward(img, ng::Mode::kTrain), seed + 23); };
  ng::GradCheckOptions opt;
  opt.max_coords_per_tensor = 24;
  return {"encoder.image", ng::gradcheck(f, wrt, opt)};
}

BlockResult model_block(fusion::ModelVariant variant, std::uint64_t seed) {
  auto cfg = fusion::tiny_config(variant);
  cfg.point.use_feature_transform = true;
  fusion::Model<double> model(cfg, seed + 31);
  Rng rng(seed + 32);
  perturb(model.store(), rng);
  fusion::ModelInputs<double> in;
  const std::size_t batch = 4, points = 6;
  in.images = random_tensor({batch, cfg.image.input_size, cfg.image.input_size, 3}, rng, 0, 1);
  in.clouds = random_tensor({batch * points, cfg.point.dims}, rng);
  in.points = points;
  in.ccm_images =
      random_tensor({batch, cfg.ccm_image.input_size, cfg.ccm_image.input_size, 3}, rng, 0, 1);
  const std::vector<int> labels{0, 1, 1, 0};
  std::vector<TD> wrt;
  for (const auto& name : model.store().parameter_names()) wrt.push_back(model.store().at(name));
  if (cfg.uses_cloud()) wrt.push_back(in.clouds);
  auto f = [&] {
    model.set_dropout_seed(seed + 33);
    return model.loss(model.forward(in, ng::Mode::kTrain), labels);
  };
  ng::GradCheckOptions opt;
  opt.max_coords_per_tensor = 8;
  return {"model." + fusion::to_string(variant), ng::gradcheck(f, wrt, opt)};
}

}  // namespace

std::vector<BlockResult> gradcheck_suite(std::uint64_t seed) {
  std::vector<BlockResult> out;
  for (LayerKind k : {LayerKind::kAffine, LayerKind::kRelu, LayerKind::kSigmoid, LayerKind::kSoftmax,
                      LayerKind::kBatchNorm, LayerKind::kDropout, LayerKind::kConv2d,
                      LayerKind::kGlobalAvgPool, LayerKind::kSetMaxPool, LayerKind::kConcat}) {
    out.push_back(layer_block(k, seed));
  }
  out.push_back(sigmoid_block(seed));
  out.push_back(ops_block(seed));
  out.push_back(point_encoder_block(3, seed));
  out.push_back(point_encoder_block(6, seed));
  out.push_back(image_encoder_block(seed));
  for (auto v : fusion::all_variants()) out.push_back(model_block(v, seed));
  return out;
}

}  // namespace simnet::harness
