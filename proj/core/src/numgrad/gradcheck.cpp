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

#include "simnet/numgrad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "simnet/rng.hpp"

namespace simnet::ng {

GradCheckReport gradcheck(const std::function<Tensor<double>()>& f,
                          const std::vector<Tensor<double>>& wrt,
                          const GradCheckOptions& options) {
  for (auto t : wrt) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  {
    Tensor<double> root = f();
    backward(root);
  }
  std::vector<std::vector<double>> analytic;
  for (const auto& t : wrt) analytic.emplace_back(t.grad().begin(), t.grad().end());

  auto eval = [&] {
    NoGradGuard guard;
    return f().item();
  };

  GradCheckReport report;
  Rng rng(options.seed);
  const double h = options.step;
  const double f0 = eval();
  for (std::size_t ti = 0; ti < wrt.size(); ++ti) {
    Tensor<double> t = wrt[ti];
    auto values = t.data();
    std::vector<std::size_t> coords(values.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > options.max_coords_per_tensor) {
      // Partial Fisher-Yates for a deterministic subset.
      for (std::size_t i = 0; i < options.max_coords_per_tensor; ++i) {
        std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
      }
      coords.resize(options.max_coords_per_tensor);
    }
    for (std::size_t idx : coords) {
      const double x0 = values[idx];
      values[idx] = x0 + h;
      const double fp = eval();
      values[idx] = x0 - h;
      const double fm = eval();
      values[idx] = x0;

      const double forward_slope = (fp - f0) / h;
      const double backward_slope = (f0 - fm) / h;
      const double numeric = (fp - fm) / (2.0 * h);
      if (std::abs(forward_slope - backward_slope) >
          options.kink_tolerance * std::max(1.0, std::abs(numeric))) {
        ++report.skipped;
        continue;
      }
      const double a = analytic[ti][idx];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
      const double err = std::abs(a - numeric) / denom;
      ++report.checked;
      if (err > report.max_rel_error || report.worst.empty()) {
        report.max_rel_error = err;
        report.worst = std::to_string(ti) + "#" + std::to_string(idx);
      }
    }
  }
  for (auto t : wrt) t.zero_grad();
  return report;
}

}  // namespace simnet::ng
