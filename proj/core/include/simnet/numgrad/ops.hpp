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

#include "simnet/numgrad/tensor.hpp"
#include "simnet/rng.hpp"

namespace simnet::ng {

// Differentiable operations. Each records an adjoint on the tape when grad
// recording is enabled and any input requires grad. Unless noted, 2-D
// tensors are row-major [rows x cols].

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// x[n x in] * w[in x out] + b[out]. `b` may be undefined.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T>
Tensor<T> square(const Tensor<T>& a);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
/// Softmax over the last axis.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

template <typename T>
Tensor<T> transpose(const Tensor<T>& x);
template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

/// Column-wise concatenation of 2-D tensors with equal row counts, in order.
template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts);
/// Columns [begin, end) of a 2-D tensor.
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t end);

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.1;
};

/// Normalizes over every axis but the last. In train mode the batch
/// statistics are used and the running buffers are updated in place.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var,
                     const BatchNormOptions& options, Mode mode);

/// Inverted dropout; identity in eval mode or when rate == 0.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Rng& rng, Mode mode);

struct ConvOptions {
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t pad = 1;
};

/// x is NHWC [B, H, W, C]; w is [(kernel * kernel * C) x O] with rows ordered
/// (dy, dx, c); output is NHWC [B, Ho, Wo, O].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 const ConvOptions& options);

/// 2x2 average pooling with stride 2 on NHWC input (odd edges truncated).
template <typename T>
Tensor<T> avg_pool2(const Tensor<T>& x);

/// NHWC [B, H, W, C] -> [B, C].
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);

/// [groups * group_size, C] -> [groups, C]; column-wise max within each group.
/// The adjoint routes to one argmax per column, lowest row on ties.
template <typename T>
Tensor<T> set_max_pool(const Tensor<T>& x, std::size_t group_size);

/// Single-set form: [m, C] -> [1, C].
template <typename T>
Tensor<T> set_max_pool(const Tensor<T>& x) {
  if (!x.defined() || x.rank() != 2) throw DimensionError("set_max_pool expects a 2-D tensor");
  return set_max_pool(x, x.dim(0));
}

/// Per-group product: x [(G*m) x k] times a [(G*k) x p] -> [(G*m) x p].
template <typename T>
Tensor<T> group_matmul(const Tensor<T>& x, const Tensor<T>& a, std::size_t groups);

template <typename T>
struct AttentionResult {
  Tensor<T> output;   // [B x E]
  Tensor<T> weights;  // [B x S], not differentiable
};

/// Scaled dot-product attention with one query per sample:
/// q [B x E], keys and values [(B*S) x E].
template <typename T>
AttentionResult<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                             std::size_t tokens);

/// mean over the batch of ||A A^T - I||_F^2 for a [(B*k) x k] stack of matrices.
template <typename T>
Tensor<T> orthogonality_penalty(const Tensor<T>& a, std::size_t k);

/// Mean binary cross-entropy on probabilities clamped to [1e-7, 1 - 1e-7].
template <typename T>
Tensor<T> bce_loss(const Tensor<T>& probs, std::span<const int> labels);

/// Mean cross-entropy of softmax(logits) against class labels.
template <typename T>
Tensor<T> softmax_ce_loss(const Tensor<T>& logits, std::span<const int> labels);

}  // namespace simnet::ng
