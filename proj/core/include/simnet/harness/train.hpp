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

#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "simnet/fusion/fusion.hpp"
#include "simnet/harness/config.hpp"
#include "simnet/harness/dataset.hpp"

namespace simnet::harness {

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0;
  double val_acc = 0;
  double val_f1 = 0;
  double lr = 0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct MetricsReport {
  std::vector<EpochMetrics> epochs;
  double final_acc = 0;
  double final_f1 = 0;
  double best_acc = 0;
  double best_f1 = 0;
  std::size_t best_epoch = 0;  // epoch of the best-accuracy checkpoint
  double wall_seconds = 0;
  std::string config_hash;
  std::uint64_t seed = 0;
};

struct TrainResult {
  MetricsReport report;
  /// Restored to the best-accuracy parameters.
  std::unique_ptr<fusion::Model<float>> model;
};

/// Where train() writes metrics.csv, best.simng, best.cfg and report.json.
/// Empty: nothing is written.
struct TrainOutputs {
  std::filesystem::path dir;
};

TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& val_set,
                  const TrainOutputs& outputs = {});

struct EvalResult {
  double accuracy = 0;
  double f1 = 0;
  std::vector<int> predictions;
};

/// Eval-mode pass without gradient recording. Repeated calls agree bitwise.
EvalResult evaluate(fusion::Model<float>& model, const Dataset& data, const TrainConfig& cfg,
                    const CloudCondition& cond);

/// Rebuilds the model from cfg and loads the checkpoint. Labels outside the
/// checkpoint's classes are a contract error.
EvalResult evaluate_checkpoint(const std::filesystem::path& checkpoint, const TrainConfig& cfg,
                               const Dataset& data);

void write_metrics_csv(const MetricsReport& report, const std::filesystem::path& path);

/// Best-of-N over `repeats` runs with seeds derived from cfg.seed; both the
/// per-metric maximum and the run with the best accuracy are reported.
struct RepeatSummary {
  std::vector<MetricsReport> runs;
  double max_acc = 0;
  double max_f1 = 0;     // may come from a different run than max_acc
  std::size_t best_run = 0;
};

RepeatSummary train_repeats(const TrainConfig& cfg, const Dataset& train_set,
                            const Dataset& val_set, const TrainOutputs& outputs = {});

/// Seed of the r-th repeat; repeat 0 keeps cfg.seed.
std::uint64_t repeat_seed(std::uint64_t seed, std::size_t r);

enum class AblationKind { kPointRemoval, kZeroZ };

AblationKind parse_ablation(const std::string& name);

struct AblationRow {
  std::string condition;
  double accuracy = 0;
  double f1 = 0;
};

struct AblationOptions {
  /// point_removal: train one model per keep fraction instead of evaluating
  /// one model at every fraction. zero_z always trains per condition.
  bool train_per_condition = false;
  /// Optional trained model for point_removal; skips training when set.
  fusion::Model<float>* trained = nullptr;
};

inline constexpr double kKeepFractions[] = {1.0, 0.4, 0.1};

/// "410 points (0.4)" for 1024 points at keep fraction 0.4.
std::string condition_label(std::size_t points, double keep);

std::vector<AblationRow> ablation_suite(const TrainConfig& cfg, const Dataset& train_set,
                                        const Dataset& val_set, AblationKind kind,
                                        const AblationOptions& options = {});

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::filesystem::path& path);

}  // namespace simnet::harness
