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

#include <string>
#include <vector>

#include "simnet/numgrad/gradcheck.hpp"

namespace simnet::harness {

struct BlockResult {
  std::string block;
  ng::GradCheckReport report;
  double tolerance = 1e-5;

  bool passed() const { return report.max_rel_error < tolerance && report.checked > 0; }
};

/// Central-difference checks in double precision over every layer kind, a
/// sigmoid-only block, both encoders and every model variant at tiny widths.
std::vector<BlockResult> gradcheck_suite(std::uint64_t seed = 0);

}  // namespace simnet::harness
