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

#include "simnet/pixel2point/pixel2point.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include "../binary_io.hpp"

namespace simnet::p2p {

EligiblePixelSet extract_eligible(const imaging::RgbImage& masked) {
  EligiblePixelSet set{masked.width, masked.height, {}};
  for (std::size_t y = 0; y < masked.height; ++y) {
    for (std::size_t x = 0; x < masked.width; ++x) {
      if (masked.is_black(x, y)) continue;
      const std::uint8_t* p = masked.pixel(x, y);
      set.points.push_back({static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y), p[0],
                            p[1], p[2]});
    }
  }
  if (set.points.empty()) throw EmptyForegroundError("no eligible (non-black) pixels");
  return set;
}

std::vector<Point2> xy_of(const EligiblePixelSet& set) {
  std::vector<Point2> xy;
  xy.reserve(set.points.size());
  for (const auto& p : set.points) xy.push_back({double(p.x), double(p.y)});
  return xy;
}

FpsResult fps(std::span<const Point2> points, std::size_t m, const FpsOptions& options) {
  const std::size_t n = points.size();
  if (n == 0) throw EmptyForegroundError("fps: empty point set");
  if (m == 0) throw ContractError("fps: target count must be positive");

  std::size_t start = 0;
  if (options.random_start) {
    Rng rng(options.seed);
    start = static_cast<std::size_t>(rng.below(n));
  } else {
    double cx = 0.0, cy = 0.0;
    for (const auto& p : points) {
      cx += p[0];
      cy += p[1];
    }
    cx /= static_cast<double>(n);
    cy /= static_cast<double>(n);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = points[i][0] - cx, dy = points[i][1] - cy;
      const double d = dx * dx + dy * dy;
      if (d < best) {
        best = d;
        start = i;
      }
    }
  }

  const std::size_t picks = std::min(n, m);
  FpsResult result;
  result.indices.reserve(m);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  std::size_t current = start;
  for (std::size_t step = 0;; ++step) {
    result.indices.push_back(current);
    taken[current] = true;
    if (step + 1 == picks) break;
    const Point2 c = points[current];
    std::size_t next = n;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const double dx = points[i][0] - c[0], dy = points[i][1] - c[1];
      const double d = dx * dx + dy * dy;
      if (d < nearest[i]) nearest[i] = d;
      if (nearest[i] > best) {
        best = nearest[i];
        next = i;
      }
    }
    current = next;
  }
  for (std::size_t i = picks; i < m; ++i) result.indices.push_back(result.indices[i - picks]);
  result.padded = m - picks;
  return result;
}

std::vector<EligiblePixel> select(const EligiblePixelSet& set,
                                  std::span<const std::size_t> indices) {
  std::vector<EligiblePixel> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= set.points.size()) throw DimensionError("select: index out of range");
    out.push_back(set.points[i]);
  }
  return out;
}

PointCloud lift_to_3d(std::span<const EligiblePixel> pixels) {
  PointCloud cloud;
  cloud.dims = 3;
  cloud.coords.reserve(pixels.size() * 3);
  for (const auto& p : pixels) {
    cloud.coords.push_back(static_cast<float>(p.x));
    cloud.coords.push_back(static_cast<float>(p.y));
    cloud.coords.push_back(static_cast<float>((double(p.r) + p.g + p.b) / 3.0));
  }
  return cloud;
}

PointCloud enrich_rgb(const PointCloud& cloud, std::span<const EligiblePixel> pixels) {
  if (cloud.dims != 3) throw ContractError("enrich_rgb: cloud already has " +
                                           std::to_string(cloud.dims) + " columns");
  if (cloud.size() != pixels.size()) {
    throw DimensionError("enrich_rgb: " + std::to_string(cloud.size()) + " points but " +
                         std::to_string(pixels.size()) + " pixels");
  }
  PointCloud out = cloud;
  out.dims = 6;
  out.coords.clear();
  out.coords.reserve(pixels.size() * 6);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) out.coords.push_back(cloud.at(i, j));
    out.coords.push_back(pixels[i].r);
    out.coords.push_back(pixels[i].g);
    out.coords.push_back(pixels[i].b);
  }
  return out;
}

PointCloud normalize_cloud(const PointCloud& cloud) {
  if (cloud.normalized) throw ContractError("normalize_cloud: cloud is already normalized");
  PointCloud out = cloud;
  out.normalized = true;
  const std::size_t m = cloud.size();
  if (m == 0) return out;
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    cx += cloud.at(i, 0);
    cy += cloud.at(i, 1);
  }
  cx /= static_cast<double>(m);
  cy /= static_cast<double>(m);
  double radius = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    radius = std::max(radius, std::hypot(cloud.at(i, 0) - cx, cloud.at(i, 1) - cy));
  }
  const double scale = radius > 0.0 ? radius : 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    out.at(i, 0) = static_cast<float>(std::clamp((cloud.at(i, 0) - cx) / scale, -1.0, 1.0));
    out.at(i, 1) = static_cast<float>(std::clamp((cloud.at(i, 1) - cy) / scale, -1.0, 1.0));
    for (std::size_t j = 2; j < cloud.dims; ++j) {
      out.at(i, j) = static_cast<float>(double(cloud.at(i, j)) / 127.5 - 1.0);
    }
  }
  return out;
}

PointCloud rotate_xy(const PointCloud& cloud, double angle) {
  PointCloud out = cloud;
  const double c = std::cos(angle), s = std::sin(angle);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double x = cloud.at(i, 0), y = cloud.at(i, 1);
    out.at(i, 0) = static_cast<float>(c * x - s * y);
    out.at(i, 1) = static_cast<float>(s * x + c * y);
  }
  return out;
}

PointCloud augment_cloud(const PointCloud& cloud, Rng& rng, const CloudAugmentOptions& options) {
  PointCloud out = cloud;
  if (options.rotate) out = rotate_xy(cloud, rng.uniform(0.0, 2.0 * std::numbers::pi));
  if (options.jitter) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        const double noise = std::clamp(rng.normal() * options.sigma, -options.clip, options.clip);
        double v = out.at(i, j) + noise;
        if (out.normalized) v = std::clamp(v, -1.0, 1.0);
        out.at(i, j) = static_cast<float>(v);
      }
    }
  }
  return out;
}

std::size_t ablated_count(std::size_t m, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ContractError("keep fraction must be in (0, 1], got " + std::to_string(keep_fraction));
  }
  const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(m) * keep_fraction));
  if (k == 0) {
    throw ContractError("keeping " + std::to_string(keep_fraction) + " of " + std::to_string(m) +
                        " points leaves none");
  }
  return k;
}

PointCloud ablate_points(const PointCloud& cloud, double keep_fraction, Rng& rng) {
  const std::size_t m = cloud.size();
  const std::size_t k = ablated_count(m, keep_fraction);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(order[i], order[i + static_cast<std::size_t>(rng.below(m - i))]);
  }
  order.resize(k);
  std::sort(order.begin(), order.end());
  PointCloud out = cloud;
  out.coords.clear();
  out.coords.reserve(k * cloud.dims);
  for (std::size_t i : order) {
    for (std::size_t j = 0; j < cloud.dims; ++j) out.coords.push_back(cloud.at(i, j));
  }
  out.padded = 0;
  return out;
}

PointCloud zero_z(const PointCloud& cloud) {
  PointCloud out = cloud;
  for (std::size_t i = 0; i < out.size(); ++i) out.at(i, 2) = 0.0f;
  return out;
}

namespace {
constexpr char kMagic[] = "SIMPC1";
constexpr std::size_t kMagicLen = 6;
}  // namespace

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  if (cloud.dims != 3 && cloud.dims != 6) {
    throw ContractError("write_cloud: dims must be 3 or 6, got " + std::to_string(cloud.dims));
  }
  if (cloud.coords.size() != cloud.size() * cloud.dims ||
      cloud.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw DimensionError("write_cloud: malformed coordinate array");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, kMagicLen);
  io::put<std::uint8_t>(out, kCloudFormatVersion);
  io::put<std::uint8_t>(out, static_cast<std::uint8_t>(cloud.dims));
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(cloud.size()));
  io::put<std::uint8_t>(out, cloud.normalized ? 1 : 0);
  for (float v : cloud.coords) io::put_f32(out, v);
  if (!out) throw IoError("write failed: " + path.string());
}

PointCloud read_cloud(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  try {
    magic = io::get_bytes(in, kMagicLen, "magic");
  } catch (const IoError&) {
    throw FormatError(path.string() + " is too short to be a SIMPC1 cloud");
  }
  if (magic != kMagic) throw FormatError(path.string() + " is not a SIMPC1 cloud");
  const auto version = io::get<std::uint8_t>(in, "version");
  if (version != kCloudFormatVersion) {
    throw FormatError(path.string() + ": unsupported cloud version " + std::to_string(version));
  }
  const auto dims = io::get<std::uint8_t>(in, "dims");
  if (dims != 3 && dims != 6) {
    throw FormatError(path.string() + ": dims byte " + std::to_string(dims) + " not in {3, 6}");
  }
  const auto m = io::get<std::uint32_t>(in, "point count");
  const auto normalized = io::get<std::uint8_t>(in, "normalized flag");
  PointCloud cloud;
  cloud.dims = dims;
  cloud.normalized = normalized != 0;
  cloud.source = path.stem().string();
  cloud.coords.resize(std::size_t{m} * dims);
  for (auto& v : cloud.coords) v = io::get_f32(in, "coordinates");
  return cloud;
}

PointCloud image_to_cloud(const imaging::RgbImage& masked, const CloudOptions& options,
                          const std::string& source) {
  if (options.dims != 3 && options.dims != 6) {
    throw ContractError("cloud dims must be 3 or 6, got " + std::to_string(options.dims));
  }
  const EligiblePixelSet set = extract_eligible(masked);
  const std::vector<Point2> xy = xy_of(set);
  const FpsResult picked = fps(xy, options.points, options.fps);
  const std::vector<EligiblePixel> pixels = select(set, picked.indices);
  PointCloud cloud = lift_to_3d(pixels);
  if (options.dims == 6) cloud = enrich_rgb(cloud, pixels);
  if (options.normalize) cloud = normalize_cloud(cloud);
  cloud.source = source;
  cloud.padded = picked.padded;
  return cloud;
}

}  // namespace simnet::p2p
