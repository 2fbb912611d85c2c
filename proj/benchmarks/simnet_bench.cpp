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

#include <benchmark/benchmark.h>

#include <vector>

#include "simnet/fusion/fusion.hpp"
#include "simnet/imaging/image.hpp"
#include "simnet/numgrad/gemm.hpp"
#include "simnet/numgrad/optim.hpp"
#include "simnet/numgrad/tensor.hpp"
#include "simnet/pixel2point/pixel2point.hpp"
#include "simnet/rng.hpp"
#include "simnet/synthdata/synthdata.hpp"

namespace {

using namespace simnet;

std::vector<float> random_floats(std::size_t n, Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

// Shape of the widest per-point layer: (batch * points) x 128 -> 1024.
void BM_GemmRows(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0)), k = 128, p = 1024;
  Rng rng(1);
  const auto x = random_floats(n * k, rng), w = random_floats(k * p, rng), b = random_floats(p, rng);
  std::vector<float> y(n * p);
  for (auto _ : state) {
    ng::gemm_rows(n, k, p, x.data(), w.data(), b.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.counters["GFLOP/s"] = benchmark::Counter(2.0 * double(n * k * p),
                                                 benchmark::Counter::kIsIterationInvariantRate,
                                                 benchmark::Counter::kIs1000);
}
BENCHMARK(BM_GemmRows)->Arg(256)->Arg(8192)->Unit(benchmark::kMillisecond);

void BM_Fps(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const std::size_t m = static_cast<std::size_t>(state.range(1));
  Rng rng(2);
  std::vector<p2p::Point2> pts(n);
  for (auto& p : pts) p = {rng.uniform(0.0, 512.0), rng.uniform(0.0, 512.0)};
  for (auto _ : state) benchmark::DoNotOptimize(p2p::fps(pts, m).indices.data());
}
BENCHMARK(BM_Fps)->Args({4096, 256})->Args({65536, 1024})->Unit(benchmark::kMillisecond);

void BM_ImageToCloud(benchmark::State& state) {
  synth::SynthConfig cfg;
  cfg.size = static_cast<std::size_t>(state.range(0));
  cfg.min_eligible = 1;
  const auto sample = synth::render_sample(cfg, 0, synth::sample_seeds(cfg, "train", 0, 0));
  const auto masked = imaging::apply_mask(sample.image, sample.mask);
  p2p::CloudOptions opt;
  opt.points = 1024;
  for (auto _ : state) benchmark::DoNotOptimize(p2p::image_to_cloud(masked, opt).coords.data());
}
BENCHMARK(BM_ImageToCloud)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_EncodeCcm(benchmark::State& state) {
  const std::size_t s = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  imaging::RgbImage img(s, s);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.below(256));
  for (auto _ : state) benchmark::DoNotOptimize(imaging::encode_ccm(img).data.data());
}
BENCHMARK(BM_EncodeCcm)->Arg(256)->Unit(benchmark::kMicrosecond);

fusion::ModelInputs<float> batch_inputs(const fusion::ModelConfig& cfg, std::size_t batch,
                                        std::size_t points, Rng& rng) {
  fusion::ModelInputs<float> in;
  const std::size_t s = cfg.image.input_size;
  in.images = ng::Tensor<float>({batch, s, s, 3}, random_floats(batch * s * s * 3, rng));
  in.clouds = ng::Tensor<float>({batch * points, cfg.point.dims},
                                random_floats(batch * points * cfg.point.dims, rng));
  in.points = points;
  return in;
}

void BM_ForwardEval(benchmark::State& state) {
  fusion::ModelConfig cfg;
  cfg.variant = static_cast<fusion::ModelVariant>(state.range(0));
  fusion::Model<float> model(cfg, 4);
  Rng rng(5);
  const auto in = batch_inputs(cfg, 32, 256, rng);
  ng::NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(in, ng::Mode::kEval).probs.data().data());
  state.SetLabel(fusion::to_string(cfg.variant));
}
BENCHMARK(BM_ForwardEval)
    ->Arg(static_cast<int>(fusion::ModelVariant::kImageOnly))
    ->Arg(static_cast<int>(fusion::ModelVariant::kCloudOnly))
    ->Arg(static_cast<int>(fusion::ModelVariant::kSimnetConcat))
    ->Arg(static_cast<int>(fusion::ModelVariant::kSimnetBca))
    ->Unit(benchmark::kMillisecond);

// One optimizer step of the default SIM-Net at batch 32, 256 points.
void BM_TrainStep(benchmark::State& state) {
  fusion::ModelConfig cfg;
  fusion::Model<float> model(cfg, 6);
  Rng rng(7);
  const auto in = batch_inputs(cfg, 32, 256, rng);
  std::vector<int> labels(32);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  ng::AdamState<float> adam;
  for (auto _ : state) {
    const auto out = model.forward(in, ng::Mode::kTrain);
    ng::backward(model.loss(out, labels));
    ng::adam_step(model.store(), adam, 1e-3);
    model.store().zero_grad();
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace

int main(int argc, char** argv) {
  simnet::ng::configure_allocator();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
