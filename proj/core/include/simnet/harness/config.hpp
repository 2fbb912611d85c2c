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
#include <cstdint>
#include <filesystem>
#include <string>

#include "simnet/fusion/fusion.hpp"

namespace simnet::harness {

/// Experiment configuration. On disk it is a flat `key = value` file; `#`
/// starts a comment. Unknown keys are rejected.
struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lr = 0.001;
  double weight_decay = 1e-4;
  std::size_t lr_step = 20;
  double lr_gamma = 0.7;
  std::uint64_t seed = 0;
  fusion::ModelVariant variant = fusion::ModelVariant::kSimnetConcat;
  std::size_t classes = 2;
  std::size_t cloud_dims = 3;
  std::size_t points = 256;
  std::size_t image_size = 64;
  bool augment_image = true;
  bool augment_cloud = true;
  /// Image branch input: false feeds the raw image, true the masked one.
  bool masked_image = false;
  bool input_transform = true;
  bool feature_transform = false;
  double transform_reg = 0.001;
  double dropout = 0.3;
  /// Used only when the manifest carries no train/val split.
  double val_fraction = 0.2;
  std::size_t repeats = 1;
  /// Ablation conditions, applied to every cloud in training and evaluation.
  double keep_fraction = 1.0;
  bool zero_z = false;
  std::string manifest;

  void validate() const;
};

TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);
/// Every key in a fixed order; parse_config(to_text(c)) == c.
std::string to_text(const TrainConfig& cfg);
/// FNV-1a of to_text, as 16 hex digits.
std::string config_hash(const TrainConfig& cfg);

fusion::ModelConfig model_config(const TrainConfig& cfg);

bool operator==(const TrainConfig& a, const TrainConfig& b);

}  // namespace simnet::harness
