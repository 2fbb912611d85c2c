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
#include <span>
#include <string>
#include <vector>

#include "simnet/imaging/image.hpp"
#include "simnet/rng.hpp"

namespace simnet::p2p {

struct EligiblePixel {
  std::uint32_t x;  // column
  std::uint32_t y;  // row
  std::uint8_t r, g, b;

  friend bool operator==(const EligiblePixel&, const EligiblePixel&) = default;
};

struct EligiblePixelSet {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<EligiblePixel> points;
};

/// m x dims row-major. Columns are x, y, z and, for dims == 6, r, g, b.
struct PointCloud {
  std::size_t dims = 3;
  std::vector<float> coords;
  bool normalized = false;
  std::string source;       // provenance: source image id
  std::size_t padded = 0;   // rows that repeat earlier rows (under-full FPS)

  std::size_t size() const { return dims ? coords.size() / dims : 0; }
  float& at(std::size_t i, std::size_t j) { return coords[i * dims + j]; }
  float at(std::size_t i, std::size_t j) const { return coords[i * dims + j]; }
};

/// Non-black pixels of a masked image in row-major order.
EligiblePixelSet extract_eligible(const imaging::RgbImage& masked);

using Point2 = std::array<double, 2>;

struct FpsOptions {
  /// Start from a seeded random point instead of the one nearest the centroid.
  bool random_start = false;
  std::uint64_t seed = 0;
};

struct FpsResult {
  std::vector<std::size_t> indices;
  std::size_t padded = 0;
};

/// Greedy farthest point sampling on 2-D Euclidean distance. Starts at the
/// point nearest the centroid (lowest index on ties); each further pick
/// maximizes the distance to its nearest already-picked point, lowest index on
/// ties. With fewer than m points all are picked and the sequence is cycled.
FpsResult fps(std::span<const Point2> points, std::size_t m, const FpsOptions& options = {});

std::vector<Point2> xy_of(const EligiblePixelSet& set);

std::vector<EligiblePixel> select(const EligiblePixelSet& set,
                                  std::span<const std::size_t> indices);

/// (x, y, (r+g+b)/3) per pixel, z unrounded.
PointCloud lift_to_3d(std::span<const EligiblePixel> pixels);

/// Appends r, g, b to each point of a 3-D cloud; `pixels` aligned by row.
PointCloud enrich_rgb(const PointCloud& cloud, std::span<const EligiblePixel> pixels);

/// x, y centred on the centroid and scaled into the unit disk; z and rgb
/// mapped from [0, 255] to [-1, 1].
PointCloud normalize_cloud(const PointCloud& cloud);

struct CloudAugmentOptions {
  bool rotate = true;
  bool jitter = true;
  double sigma = 0.02;
  double clip = 0.05;
};

PointCloud rotate_xy(const PointCloud& cloud, double angle);

/// Uniform rotation of (x, y) in [0, 2pi), then clipped Gaussian jitter on the
/// first three columns. Normalized clouds are clamped back into [-1, 1].
PointCloud augment_cloud(const PointCloud& cloud, Rng& rng, const CloudAugmentOptions& options = {});

/// round(m * keep_fraction) uniformly chosen rows, without replacement, in
/// their original order.
PointCloud ablate_points(const PointCloud& cloud, double keep_fraction, Rng& rng);

std::size_t ablated_count(std::size_t m, double keep_fraction);

PointCloud zero_z(const PointCloud& cloud);

// SIMPC1 layout (little-endian): "SIMPC1", u8 version(=1), u8 dims (3|6),
// u32 m, u8 normalized, then m * dims f32 values row-major.
inline constexpr std::uint8_t kCloudFormatVersion = 1;

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud read_cloud(const std::filesystem::path& path);

struct CloudOptions {
  std::size_t points = 1024;
  std::size_t dims = 3;
  bool normalize = true;
  FpsOptions fps;
};

/// The full transformation: eligible pixels -> FPS -> z-lift -> optional rgb
/// -> optional normalization. `masked` must already have had apply_mask.
PointCloud image_to_cloud(const imaging::RgbImage& masked, const CloudOptions& options,
                          const std::string& source = {});

}  // namespace simnet::p2p
