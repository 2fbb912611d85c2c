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

// Brute-force reference for farthest point sampling. Deliberately naive:
// every step recomputes, for each unpicked point, its distance to every picked
// point. Shared by the unit tests, the acceptance gate and `simnet fpscheck`.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "simnet/pixel2point/pixel2point.hpp"
#include "simnet/rng.hpp"

namespace simnet::testing {

inline std::vector<std::size_t> fps_oracle(const std::vector<p2p::Point2>& pts, std::size_t m,
                                           std::size_t start) {
  std::vector<std::size_t> picked{start};
  while (picked.size() < std::min(m, pts.size())) {
    std::size_t arg = pts.size();
    double best = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (std::find(picked.begin(), picked.end(), i) != picked.end()) continue;
      double closest = std::numeric_limits<double>::infinity();
      for (std::size_t s : picked) {
        const double dx = pts[i][0] - pts[s][0];
        const double dy = pts[i][1] - pts[s][1];
        closest = std::min(closest, dx * dx + dy * dy);
      }
      if (closest > best) {  // strict: the first maximum (lowest index) wins
        best = closest;
        arg = i;
      }
    }
    picked.push_back(arg);
  }
  // Fewer points than requested: the greedy order repeats.
  for (std::size_t i = 0; picked.size() < m; ++i) picked.push_back(picked[i]);
  return picked;
}

/// Index of the point nearest the centroid, lowest index on ties.
inline std::size_t centroid_start(const std::vector<p2p::Point2>& pts) {
  double cx = 0.0, cy = 0.0;
  for (const auto& p : pts) {
    cx += p[0];
    cy += p[1];
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  std::size_t arg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = (pts[i][0] - cx) * (pts[i][0] - cx) + (pts[i][1] - cy) * (pts[i][1] - cy);
    if (d < best) {
      best = d;
      arg = i;
    }
  }
  return arg;
}

struct FpsInstance {
  std::vector<p2p::Point2> points;
  std::size_t m;
};

/// Random instance with n <= 512 and m <= 64. Half of the instances use
/// distinct pixels of a small integer grid so equal distances (ties) are common.
inline FpsInstance random_fps_instance(Rng& rng) {
  FpsInstance inst;
  const std::size_t n = 1 + static_cast<std::size_t>(rng.below(512));
  inst.m = 1 + static_cast<std::size_t>(rng.below(64));
  if (rng.bernoulli(0.5)) {
    const std::size_t side = 8 + static_cast<std::size_t>(rng.below(40));
    std::vector<std::size_t> cells(side * side);
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = i;
    const std::size_t take = std::min(n, cells.size());
    for (std::size_t i = 0; i < take; ++i) {
      std::swap(cells[i], cells[i + rng.below(cells.size() - i)]);
      inst.points.push_back({double(cells[i] % side), double(cells[i] / side)});
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      inst.points.push_back({rng.uniform(0.0, 100.0), rng.uniform(0.0, 100.0)});
    }
  }
  return inst;
}

}  // namespace simnet::testing
