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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "simnet/numgrad/tensor.hpp"

namespace simnet::ng {

struct GradCheckOptions {
  double step = 1e-6;
  /// |a - n| / max(|a|, |n|, floor).
  double denominator_floor = 1e-2;
  /// A coordinate whose one-sided slopes disagree by more than this (relative
  /// to max(1, |slope|)) sits on a kink and is skipped.
  double kink_tolerance = 1e-3;
  /// Coordinates sampled per tensor; tensors this small or smaller are checked
  /// exhaustively.
  std::size_t max_coords_per_tensor = 48;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::string worst;  // "tensor#index" of the worst coordinate
};

/// Compares reverse-mode gradients of the scalar `f` with central finite
/// differences for every tensor in `wrt`. `f` must be deterministic.
GradCheckReport gradcheck(const std::function<Tensor<double>()>& f,
                          const std::vector<Tensor<double>>& wrt,
                          const GradCheckOptions& options = {});

}  // namespace simnet::ng
