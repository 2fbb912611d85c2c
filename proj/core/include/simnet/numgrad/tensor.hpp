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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "simnet/error.hpp"

namespace simnet::ng {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Train mode uses batch statistics and random dropout masks; eval mode uses
/// running statistics and identity dropout.
enum class Mode { kTrain, kEval };

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Propagates this node's grad into its parents' grads.
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
};

}  // namespace detail

/// Dense row-major array with an optional gradient buffer. Copies share the
/// underlying storage (handle semantics), like a graph node reference.
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using NodeType = detail::Node<T>;

  Tensor() = default;

  explicit Tensor(Shape shape) : node_(std::make_shared<NodeType>()) {
    node_->data.assign(shape_numel(shape), T(0));
    node_->shape = std::move(shape);
  }

  Tensor(Shape shape, std::vector<T> data) : node_(std::make_shared<NodeType>()) {
    if (shape_numel(shape) != data.size()) {
      throw DimensionError("tensor data length " + std::to_string(data.size()) +
                           " does not match shape " + shape_str(shape));
    }
    node_->shape = std::move(shape);
    node_->data = std::move(data);
  }

  static Tensor full(Shape shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.node_->data.begin(), t.node_->data.end(), value);
    return t;
  }

  static Tensor scalar(T value) { return Tensor(Shape{1}, std::vector<T>{value}); }

  bool defined() const noexcept { return node_ != nullptr; }

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->data.size(); }

  std::span<T> data() { return node_->data; }
  std::span<const T> data() const { return node_->data; }
  T* ptr() { return node_->data.data(); }
  const T* ptr() const { return node_->data.data(); }

  T item() const {
    if (numel() != 1) {
      throw ContractError("item() on tensor of shape " + shape_str(shape()));
    }
    return node_->data[0];
  }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  Tensor& set_requires_grad(bool on) {
    node_->requires_grad = on;
    return *this;
  }

  bool has_grad() const { return node_ && node_->grad.size() == node_->data.size(); }
  std::span<T> grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  std::span<const T> grad() const {
    node_->ensure_grad();
    return node_->grad;
  }
  void zero_grad() {
    if (node_) node_->grad.assign(node_->data.size(), T(0));
  }
  void clear_grad() {
    if (node_) node_->grad.clear();
  }

  /// Copy of the values, detached from any graph.
  Tensor detach() const { return Tensor(shape(), node_->data); }

  NodeType* node() const { return node_.get(); }
  const std::shared_ptr<NodeType>& impl() const { return node_; }

  static Tensor from_node(std::shared_ptr<NodeType> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

 private:
  std::shared_ptr<NodeType> node_;
};

/// Keeps large freed blocks in the heap instead of returning them to the OS,
/// so the per-step activation buffers stop page-faulting. glibc only; a no-op
/// elsewhere. Call once at program start.
void configure_allocator() noexcept;

/// Whether new operations are recorded on the tape (thread-local).
bool grad_enabled() noexcept;

/// Disables recording for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Reverse sweep from a scalar root. Leaf tensors that require grad accumulate
/// into their grad buffers; the interior of the graph is released afterwards.
template <typename T>
void backward(const Tensor<T>& root);

/// Throws NumericError if any element is NaN or infinite.
template <typename T>
void check_finite(std::span<const T> values, const char* where);

}  // namespace simnet::ng
