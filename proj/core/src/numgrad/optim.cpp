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

#include "simnet/numgrad/optim.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>

namespace simnet::ng {

template <typename T>
void adam_step(ParameterStore<T>& store, AdamState<T>& state, double lr) {
  const AdamConfig& cfg = state.config;
  for (const auto& [name, p] : store.entries()) {
    if (p.requires_grad() && !p.has_grad()) {
      throw ContractError("adam_step: parameter '" + name + "' has no gradient");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  const T wd = static_cast<T>(cfg.weight_decay);
  const T step_size = static_cast<T>(lr / c1);
  const T inv_sqrt_c2 = static_cast<T>(1.0 / std::sqrt(c2));
  const T eps = static_cast<T>(cfg.epsilon);
  const T decay = static_cast<T>(1.0 - lr * cfg.weight_decay);

  for (auto& [name, p] : store.entries()) {
    if (!p.requires_grad()) continue;
    auto w = p.data();
    auto g = p.grad();
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.size() != w.size()) {
      m.assign(w.size(), T(0));
      v.assign(w.size(), T(0));
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      T gi = g[i];
      if (!cfg.decoupled) gi += wd * w[i];
      m[i] = b1 * m[i] + (T(1) - b1) * gi;
      v[i] = b2 * v[i] + (T(1) - b2) * gi * gi;
      if (cfg.decoupled) w[i] *= decay;
      w[i] -= step_size * m[i] / (std::sqrt(v[i]) * inv_sqrt_c2 + eps);
    }
  }
}

namespace {

// x as mantissa * 10^exp using its shortest round-trip decimal form, i.e. the
// literal the user wrote in the config (0.7 -> 7e-1).
struct Decimal {
  std::uint64_t mantissa;
  int exp;
};

std::optional<Decimal> shortest_decimal(double x) {
  if (!(x > 0) || !std::isfinite(x)) return std::nullopt;
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::scientific);
  Decimal d{0, 0};
  const char* p = buf;
  int frac = 0;
  bool after_point = false;
  for (; p < res.ptr && *p != 'e'; ++p) {
    if (*p == '.') {
      after_point = true;
      continue;
    }
    d.mantissa = d.mantissa * 10 + static_cast<std::uint64_t>(*p - '0');
    frac += after_point;
  }
  int e = 0;
  std::from_chars(p + 1 + (p[1] == '+'), res.ptr, e);
  d.exp = e - frac;
  return d;
}

}  // namespace

double step_lr(std::size_t epoch, double base_lr, std::size_t step_size, double gamma) {
  if (step_size == 0) throw ContractError("step_lr: step size must be positive");
  const std::size_t k = epoch / step_size;
  // pow(0.7, k) compounds the binary error of 0.7; work on the decimal
  // literals in integers and round once at the end.
  const auto b = shortest_decimal(base_lr), g = shortest_decimal(gamma);
  if (b && g) {
    std::uint64_t num = b->mantissa;
    long long exp = b->exp + static_cast<long long>(k) * g->exp;
    bool fits = true;
    for (std::size_t i = 0; i < k && fits; ++i) fits = !__builtin_mul_overflow(num, g->mantissa, &num);
    // 10^27 is the largest power of ten exact in a long double.
    if (fits && num < (std::uint64_t{1} << 63) && exp >= -27 && exp <= 27) {
      long double scale = 1.0L;
      for (long long i = 0; i < (exp < 0 ? -exp : exp); ++i) scale *= 10.0L;
      const long double n = static_cast<long double>(num);
      return static_cast<double>(exp < 0 ? n / scale : n * scale);
    }
  }
  return static_cast<double>(static_cast<long double>(base_lr) *
                             std::pow(static_cast<long double>(gamma), static_cast<long double>(k)));
}

template void adam_step<float>(ParameterStore<float>&, AdamState<float>&, double);
template void adam_step<double>(ParameterStore<double>&, AdamState<double>&, double);

}  // namespace simnet::ng
