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

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "simnet/numgrad/tensor.hpp"
#include "simnet/rng.hpp"

namespace simnet::ng {

enum class Init {
  kZeros,
  kOnes,
  /// U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)).
  kKaimingUniform,
};

/// Named parameters and buffers of one model. Iteration is lexicographic by
/// name. Each parameter's initial values are drawn from a generator seeded by
/// (store seed, name), so adding a parameter never shifts another's values.
template <typename T>
class ParameterStore {
 public:
  explicit ParameterStore(std::uint64_t seed = 0) : seed_(seed) {}

  Tensor<T>& add_parameter(const std::string& name, Shape shape, Init init,
                           std::size_t fan_in = 0) {
    Tensor<T>& t = insert(name, std::move(shape));
    t.set_requires_grad(true);
    fill(name, t, init, fan_in);
    return t;
  }

  /// Non-trainable state such as batch-norm running statistics.
  Tensor<T>& add_buffer(const std::string& name, Shape shape, T value) {
    Tensor<T>& t = insert(name, std::move(shape));
    for (auto& v : t.data()) v = value;
    init_record_[name] = "buffer";
    return t;
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  Tensor<T>& at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("no parameter named '" + name + "'");
    return it->second;
  }
  const Tensor<T>& at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw ContractError("no parameter named '" + name + "'");
    return it->second;
  }

  const std::map<std::string, Tensor<T>>& entries() const { return entries_; }
  std::map<std::string, Tensor<T>>& entries() { return entries_; }

  /// How each entry was initialized ("kaiming_uniform(fan_in=..)", "zeros", ...).
  const std::map<std::string, std::string>& init_record() const { return init_record_; }

  std::vector<std::string> parameter_names() const {
    std::vector<std::string> names;
    for (const auto& [name, t] : entries_) {
      if (t.requires_grad()) names.push_back(name);
    }
    return names;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) {
      if (t.requires_grad()) n += t.numel();
    }
    return n;
  }

  void zero_grad() {
    for (auto& [name, t] : entries_) {
      if (t.requires_grad()) t.zero_grad();
    }
  }

  std::uint64_t seed() const { return seed_; }

 private:
  Tensor<T>& insert(const std::string& name, Shape shape) {
    if (entries_.count(name)) throw ContractError("duplicate parameter name '" + name + "'");
    return entries_.emplace(name, Tensor<T>(std::move(shape))).first->second;
  }

  void fill(const std::string& name, Tensor<T>& t, Init init, std::size_t fan_in) {
    switch (init) {
      case Init::kZeros:
        init_record_[name] = "zeros";
        break;
      case Init::kOnes:
        for (auto& v : t.data()) v = T(1);
        init_record_[name] = "ones";
        break;
      case Init::kKaimingUniform: {
        if (fan_in == 0) throw ContractError("kaiming init of '" + name + "' needs fan_in");
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        Rng rng(mix_seed(seed_, fnv1a(name)));
        for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
        init_record_[name] = "kaiming_uniform(fan_in=" + std::to_string(fan_in) + ")";
        break;
      }
    }
  }

  std::uint64_t seed_;
  std::map<std::string, Tensor<T>> entries_;
  std::map<std::string, std::string> init_record_;
};

}  // namespace simnet::ng
