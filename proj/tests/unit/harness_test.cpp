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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "simnet/error.hpp"
#include "simnet/harness/config.hpp"
#include "simnet/harness/gradcheck_suite.hpp"
#include "simnet/harness/metrics.hpp"
#include "simnet/harness/train.hpp"
#include "simnet/numgrad/optim.hpp"

namespace simnet::harness {
namespace {

namespace fs = std::filesystem;

// Independent F1 route: harmonic mean of precision and recall.
double f1_oracle(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp == 0) return 0.0;
  const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double r = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2 * p * r / (p + r);
}

void fill(std::vector<int>& pred, std::vector<int>& truth, std::size_t n, int p, int t) {
  for (std::size_t i = 0; i < n; ++i) {
    pred.push_back(p);
    truth.push_back(t);
  }
}

TEST(Metrics, Examples) {
  EXPECT_NEAR(f1_score({2, 1, 1, 0}), 4.0 / 6.0, 1e-15);
  const std::vector<int> y{1, 0, 1, 1, 0};
  EXPECT_EQ(accuracy(y, y), 1.0);
  EXPECT_EQ(f1(y, y, 2), 1.0);
  const std::vector<int> none{0, 0, 0, 0, 0};
  EXPECT_EQ(f1(none, y, 2), 0.0);
  EXPECT_DOUBLE_EQ(accuracy(none, y), 0.4);
  EXPECT_THROW(accuracy(std::vector<int>{1}, y), DimensionError);
}

TEST(Metrics, F1AgainstConfusionOracle) {
  for (std::size_t tp = 0; tp <= 20; ++tp) {
    for (std::size_t fp = 0; fp <= 20; ++fp) {
      for (std::size_t fn = 0; fn <= 20; ++fn) {
        for (std::size_t tn : {0u, 7u, 20u}) {
          std::vector<int> pred, truth;
          fill(pred, truth, tp, 1, 1);
          fill(pred, truth, fp, 1, 0);
          fill(pred, truth, fn, 0, 1);
          fill(pred, truth, tn, 0, 0);
          if (truth.empty()) continue;
          const Confusion c = confusion(pred, truth, 1);
          ASSERT_EQ(c.tp, tp);
          ASSERT_EQ(c.fp, fp);
          ASSERT_EQ(c.fn, fn);
          ASSERT_EQ(c.tn, tn);
          ASSERT_NEAR(f1(pred, truth, 2), f1_oracle(tp, fp, fn), 1e-12);
          ASSERT_NEAR(accuracy(pred, truth),
                      static_cast<double>(tp + tn) / static_cast<double>(truth.size()), 1e-15);
        }
      }
    }
  }
}

TEST(Metrics, MacroF1) {
  const std::vector<int> truth{0, 0, 1, 1, 2, 2};
  const std::vector<int> pred{0, 1, 1, 1, 2, 0};
  const double expect = (f1_oracle(1, 1, 1) + f1_oracle(2, 1, 0) + f1_oracle(1, 0, 1)) / 3;
  EXPECT_NEAR(f1(pred, truth, 3), expect, 1e-12);
}

TEST(Config, ParseAndRoundTrip) {
  const TrainConfig c = parse_config(
      "# experiment\nepochs = 7\nbatch_size=16\nlr = 0.002  # base\nfusion = bca\n"
      "cloud_dims = 6\nmanifest = \"data/m.jsonl\"\naugment_cloud = false\n");
  EXPECT_EQ(c.epochs, 7u);
  EXPECT_EQ(c.batch_size, 16u);
  EXPECT_EQ(c.lr, 0.002);
  EXPECT_EQ(c.variant, fusion::ModelVariant::kSimnetBca);
  EXPECT_EQ(c.cloud_dims, 6u);
  EXPECT_EQ(c.manifest, "data/m.jsonl");
  EXPECT_FALSE(c.augment_cloud);
  EXPECT_TRUE(parse_config(to_text(c)) == c);
  EXPECT_EQ(config_hash(parse_config(to_text(c))), config_hash(c));
  TrainConfig d = c;
  d.seed = 1;
  EXPECT_NE(config_hash(d), config_hash(c));
  EXPECT_EQ(config_hash(TrainConfig{}).size(), 16u);
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("epochs = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("batch_size = 24\n"), ConfigError);
  EXPECT_THROW(parse_config("learning_rate = 0.1\n"), ConfigError);
  EXPECT_THROW(parse_config("epochs 3\n"), ConfigError);
  EXPECT_THROW(parse_config("epochs = three\n"), ConfigError);
  EXPECT_THROW(parse_config("variant = resnet\n"), ConfigError);
  EXPECT_THROW(parse_config("keep_fraction = 0\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/simnet.cfg"), IoError);
}

TEST(Config, ModelConfigCarriesFields) {
  TrainConfig c;
  c.cloud_dims = 6;
  c.feature_transform = true;
  c.image_size = 32;
  const auto m = model_config(c);
  EXPECT_EQ(m.point.dims, 6u);
  EXPECT_TRUE(m.point.use_feature_transform);
  EXPECT_EQ(m.image.input_size, 32u);
  EXPECT_EQ(m.fused_size(), 2056u);
}

// Each sample is a cloud whose points scatter tightly around one 2-d feature
// point; the label is a linear function of that point with a margin.
Dataset separable(std::size_t n, std::size_t points, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  while (d.size() < n) {
    const double a = rng.uniform(-0.8, 0.8), b = rng.uniform(-0.8, 0.8);
    const double s = a + 0.5 * b;
    if (std::abs(s) < 0.15) continue;
    p2p::PointCloud c;
    c.dims = 3;
    c.normalized = true;
    for (std::size_t i = 0; i < points; ++i) {
      c.coords.push_back(static_cast<float>(a + rng.uniform(-0.02, 0.02)));
      c.coords.push_back(static_cast<float>(b + rng.uniform(-0.02, 0.02)));
      c.coords.push_back(0.0f);
    }
    d.clouds.push_back(std::move(c));
    d.labels.push_back(s > 0 ? 1 : 0);
    d.ids.push_back("s" + std::to_string(d.size()));
  }
  return d;
}

TrainConfig toy_config() {
  TrainConfig c;
  c.variant = fusion::ModelVariant::kCloudOnly;
  c.points = 8;
  c.batch_size = 16;
  c.augment_cloud = false;
  c.seed = 3;
  return c;
}

TEST(Train, SeparableToyReachesHighAccuracy) {
  const Dataset tr = separable(96, 8, 1), va = separable(60, 8, 2);
  TrainConfig c = toy_config();
  c.epochs = 100;
  const auto res = train(c, tr, va);
  EXPECT_GE(res.report.best_acc, 0.95);
  // The restored model is the best-accuracy one.
  EXPECT_EQ(evaluate(*res.model, va, c, {}).accuracy, res.report.best_acc);
}

TEST(Train, DeterministicReportAndExactSchedule) {
  const Dataset tr = separable(33, 8, 4), va = separable(20, 8, 5);  // 33 = 32 + a lone row
  TrainConfig c = toy_config();
  c.batch_size = 32;
  c.epochs = 45;
  const auto a = train(c, tr, va).report;
  const auto b = train(c, tr, va).report;
  EXPECT_EQ(a.epochs, b.epochs);
  EXPECT_EQ(a.best_acc, b.best_acc);
  EXPECT_EQ(a.config_hash, b.config_hash);
  ASSERT_EQ(a.epochs.size(), 45u);
  for (const auto& e : a.epochs) {
    EXPECT_EQ(e.lr, ng::step_lr(e.epoch, 0.001));
    EXPECT_TRUE(std::isfinite(e.train_loss));
  }
  EXPECT_DOUBLE_EQ(a.epochs[20].lr, 0.0007);
  EXPECT_EQ(a.epochs[19].lr, 0.001);
}

TEST(Train, EmptySplitsAndDivergence) {
  TrainConfig c = toy_config();
  c.epochs = 1;
  const Dataset va = separable(8, 8, 6);
  EXPECT_THROW(train(c, Dataset{}, va), DataError);
  EXPECT_THROW(load_dataset({}, c), DataError);
  Dataset bad = separable(16, 8, 7);
  for (float& v : bad.clouds[3].coords) v = 3.3e38f;
  try {
    train(c, bad, va);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 0);
    EXPECT_GE(e.batch(), 0);
  }
}

TEST(Train, FilesCheckpointAndEvaluate) {
  const fs::path dir = fs::temp_directory_path() / "simnet_harness_files";
  fs::remove_all(dir);
  const Dataset tr = separable(32, 8, 8), va = separable(20, 8, 9);
  TrainConfig c = toy_config();
  c.epochs = 3;
  auto res = train(c, tr, va, {dir});
  std::ifstream csv(dir / "metrics.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "epoch,train_loss,val_acc,val_f1,lr");
  EXPECT_TRUE(fs::exists(dir / "best.simng"));
  const TrainConfig side = load_config(dir / "best.cfg");
  EXPECT_TRUE(side == c);
  const auto direct = evaluate(*res.model, va, c, {});
  const auto again = evaluate(*res.model, va, c, {});
  EXPECT_EQ(direct.predictions, again.predictions);
  const auto loaded = evaluate_checkpoint(dir / "best.simng", side, va);
  EXPECT_EQ(loaded.predictions, direct.predictions);
  EXPECT_EQ(loaded.accuracy, res.report.best_acc);
  Dataset foreign = va;
  foreign.labels[0] = 2;
  EXPECT_THROW(evaluate_checkpoint(dir / "best.simng", side, foreign), ContractError);
  fs::remove_all(dir);
}

TEST(Repeats, SeedsAndMaxima) {
  const Dataset tr = separable(32, 8, 10), va = separable(20, 8, 11);
  TrainConfig c = toy_config();
  c.epochs = 2;
  c.repeats = 3;
  const auto s = train_repeats(c, tr, va);
  ASSERT_EQ(s.runs.size(), 3u);
  EXPECT_EQ(s.runs[0].seed, c.seed);
  EXPECT_NE(s.runs[1].seed, s.runs[2].seed);
  for (const auto& r : s.runs) {
    EXPECT_LE(r.best_acc, s.max_acc);
    EXPECT_LE(r.best_f1, s.max_f1);
  }
  EXPECT_EQ(s.runs[s.best_run].best_acc, s.max_acc);
}

TEST(Ablation, ConditionLabels) {
  EXPECT_EQ(condition_label(1024, 1.0), "1024 points (1.0)");
  EXPECT_EQ(condition_label(1024, 0.4), "410 points (0.4)");
  EXPECT_EQ(condition_label(1024, 0.1), "102 points (0.1)");
  EXPECT_EQ(parse_ablation("points"), AblationKind::kPointRemoval);
  EXPECT_EQ(parse_ablation("zeroz"), AblationKind::kZeroZ);
  EXPECT_THROW(parse_ablation("dropout"), ConfigError);
}

TEST(Ablation, SuitesProduceRows) {
  const Dataset tr = separable(32, 20, 12), va = separable(20, 20, 13);
  TrainConfig c = toy_config();
  c.points = 20;
  c.epochs = 2;
  const auto pts = ablation_suite(c, tr, va, AblationKind::kPointRemoval);
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts[0].condition, "20 points (1.0)");
  EXPECT_EQ(pts[1].condition, "8 points (0.4)");
  EXPECT_EQ(pts[2].condition, "2 points (0.1)");
  const auto zz = ablation_suite(c, tr, va, AblationKind::kZeroZ);
  ASSERT_EQ(zz.size(), 2u);
  EXPECT_EQ(zz[0].condition, "with_z");
  EXPECT_EQ(zz[1].condition, "without_z");
  for (const auto& r : pts) {
    EXPECT_GE(r.accuracy, 0.0);
    EXPECT_LE(r.accuracy, 1.0);
  }
  const fs::path csv = fs::temp_directory_path() / "simnet_ablation.csv";
  write_ablation_csv(pts, csv);
  std::ifstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "condition,acc,f1");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("20 points (1.0),", 0), 0u);
}

TEST(GradcheckSuite, AllBlocksPass) {
  const auto blocks = gradcheck_suite();
  EXPECT_GE(blocks.size(), 10u + 5u + fusion::all_variants().size());
  for (const auto& b : blocks) {
    EXPECT_TRUE(b.passed()) << b.block << " " << b.report.max_rel_error << " at " << b.report.worst;
    if (b.block == "sigmoid") {
      EXPECT_LT(b.report.max_rel_error, 1e-8);
    }
  }
}

}  // namespace
}  // namespace simnet::harness
