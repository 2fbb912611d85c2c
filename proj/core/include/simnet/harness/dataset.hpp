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
#include <string>
#include <vector>

#include "simnet/fusion/fusion.hpp"
#include "simnet/harness/config.hpp"
#include "simnet/imaging/image.hpp"
#include "simnet/pixel2point/pixel2point.hpp"
#include "simnet/rng.hpp"
#include "simnet/synthdata/synthdata.hpp"

namespace simnet::harness {

/// Decoded samples of one split, ready for batching.
struct Dataset {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<imaging::RgbImage> images;  // image_size square
  std::vector<p2p::PointCloud> clouds;    // cfg.points x cfg.cloud_dims
  std::vector<imaging::RgbImage> ccm;     // only for the ccm variant

  std::size_t size() const { return labels.size(); }
};

/// Loads images (resized to cfg.image_size), masks and clouds. A cloud file
/// with more rows than cfg.points is truncated to its first rows, which for
/// FPS output is itself an FPS sample; rgb columns are dropped for 3-d runs.
/// Records without a cloud file get one computed from image and mask.
Dataset load_dataset(const synth::Manifest& records, const TrainConfig& cfg);

/// Cloud-side condition applied before batching.
struct CloudCondition {
  double keep_fraction = 1.0;
  bool zero_z = false;
};

struct Batch {
  fusion::ModelInputs<float> inputs;
  std::vector<int> labels;
};

/// `aug` enables train-time augmentation; `cond_rng` drives point removal.
Batch make_batch(const Dataset& data, std::span<const std::size_t> indices,
                 const TrainConfig& cfg, const CloudCondition& cond, Rng* aug, Rng& cond_rng);

}  // namespace simnet::harness
