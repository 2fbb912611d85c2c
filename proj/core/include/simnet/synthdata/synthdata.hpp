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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "simnet/imaging/image.hpp"

namespace simnet::synth {

/// Where the class signal lives. shape: smooth vs spiked silhouettes with
/// shared colors. texture: shared silhouettes, class-shifted colors. zsignal:
/// shared silhouettes and channel marginals; the sign of a radial brightness
/// ramp carries the class.
enum class Task { kShape, kTexture, kZsignal };

std::string to_string(Task task);
Task parse_task(std::string_view name);

struct SynthConfig {
  Task task = Task::kShape;
  std::size_t classes = 2;
  std::size_t size = 64;
  std::size_t train_per_class = 400;
  std::size_t val_per_class = 100;
  double noise = 0.06;          // per-pixel Gaussian sigma, fraction of 255
  std::size_t decoys = 1;       // camouflaged distractor objects outside the mask
  bool clutter = true;
  std::size_t points = 256;     // cloud size written next to each image
  std::size_t dims = 6;         // 6 keeps rgb so either width can be read back
  std::size_t min_eligible = 256;
  std::uint64_t seed = 0;
  std::size_t threads = 0;      // 0: hardware concurrency

  void validate() const;
};

struct SampleRecord {
  std::string id;
  std::string image;
  std::string mask;
  std::string cloud;
  int label = 0;
  std::string split;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

using Manifest = std::vector<SampleRecord>;

struct Sample {
  imaging::RgbImage image;
  imaging::MaskImage mask;
  int label = 0;
};

/// Per-sample streams. For shape and zsignal the color stream is shared by
/// the i-th sample of every class so color statistics match pairwise.
struct SampleSeeds {
  std::uint64_t shape;
  std::uint64_t color;
  std::uint64_t clutter;
};

SampleSeeds sample_seeds(const SynthConfig& cfg, std::string_view split, std::size_t index,
                         int label);

Sample render_sample(const SynthConfig& cfg, int label, const SampleSeeds& seeds);

/// Foreground color moments per class and channel, every sample weighted
/// equally.
struct ColorStats {
  std::array<double, 3> mean{};
  std::array<double, 3> var{};
  std::size_t pixels = 0;
  std::size_t samples = 0;
};

struct GenerateReport {
  Manifest manifest;
  std::vector<ColorStats> train_color_stats;  // indexed by label
};

/// Renders every sample, writes images/, masks/, clouds/ and manifest.jsonl
/// under `out_dir`. For the shape task the per-class foreground color means
/// and variances must agree within 2%, otherwise DataError. The returned
/// manifest's paths are prefixed with `out_dir`, as read_manifest would give.
GenerateReport generate(const SynthConfig& cfg, const std::filesystem::path& out_dir);

/// Largest relative gap between two classes' color means or variances.
double color_stats_gap(const ColorStats& a, const ColorStats& b);

/// One JSON object per line: id, image, mask, cloud, label, split.
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
/// Relative file paths are resolved against the manifest's directory.
Manifest read_manifest(const std::filesystem::path& path);

Manifest select_split(const Manifest& manifest, std::string_view split);

/// Stratified by label: each class keeps round(n * val_fraction) validation
/// samples, at least one and at most n - 1.
std::pair<Manifest, Manifest> split_manifest(const Manifest& manifest, double val_fraction,
                                             std::uint64_t seed);

}  // namespace simnet::synth
