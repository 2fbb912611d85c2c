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

#include "simnet/harness/metrics.hpp"

#include "simnet/error.hpp"

namespace simnet::harness {

double f1_score(const Confusion& c) {
  if (c.tp + c.fp == 0) return 0.0;
  return 2.0 * c.tp / static_cast<double>(2 * c.tp + c.fp + c.fn);
}

Confusion confusion(std::span<const int> predicted, std::span<const int> truth, int positive) {
  if (predicted.size() != truth.size()) {
    throw DimensionError("confusion: " + std::to_string(predicted.size()) + " predictions for " +
                         std::to_string(truth.size()) + " labels");
  }
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool p = predicted[i] == positive, t = truth[i] == positive;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw DimensionError("accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                         std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw DataError("accuracy of an empty split");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double f1(std::span<const int> predicted, std::span<const int> truth, std::size_t classes) {
  if (classes == 2) return f1_score(confusion(predicted, truth, 1));
  double total = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    total += f1_score(confusion(predicted, truth, static_cast<int>(c)));
  }
  return total / static_cast<double>(classes);
}

}  // namespace simnet::harness
