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

#include "simnet/numgrad/tensor.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace simnet::ng {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("shape " + shape_str(shape) + " has a zero extent");
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {
thread_local bool g_grad_enabled = true;
}

void configure_allocator() noexcept {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
void backward(const Tensor<T>& root) {
  if (!root.defined() || root.numel() != 1) {
    throw ContractError("backward() needs a scalar root, got shape " +
                        (root.defined() ? shape_str(root.shape()) : std::string("<undefined>")));
  }
  if (!root.requires_grad()) {
    throw ContractError("backward() root is not on the tape");
  }

  using NodeT = detail::Node<T>;
  // Iterative post-order DFS; `order` ends up parents-before-children.
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> seen;
  std::vector<std::pair<NodeT*, std::size_t>> stack{{root.node(), 0}};
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      NodeT* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad();
  root.node()->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* node = *it;
    if (node->backward && node->grad.size() == node->data.size()) node->backward(*node);
  }
  for (NodeT* node : order) {
    if (node->backward) {
      node->backward = nullptr;
      node->parents.clear();
      node->grad.clear();
      node->grad.shrink_to_fit();
    }
  }
}

template <typename T>
void check_finite(std::span<const T> values, const char* where) {
  for (T v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value in ") + where);
  }
}

template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);
template void check_finite<float>(std::span<const float>, const char*);
template void check_finite<double>(std::span<const double>, const char*);

}  // namespace simnet::ng
