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
#include <span>
#include <vector>

namespace simnet::harness {

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

/// 2TP / (2TP + FP + FN); 0 when nothing is predicted positive.
double f1_score(const Confusion& c);

/// Class `positive` against the rest.
Confusion confusion(std::span<const int> predicted, std::span<const int> truth, int positive);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Binary F1 on class 1 for two classes, macro-F1 otherwise.
double f1(std::span<const int> predicted, std::span<const int> truth, std::size_t classes);

}  // namespace simnet::harness
