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

namespace simnet::ng {

/// y[n x p] = x[n x k] * w[k x p] (+ bias[p]), all row-major.
///
/// Every output row is produced by the same instruction sequence no matter
/// where it sits in x (ragged row blocks are padded), so permuting the rows of
/// x permutes the rows of y bitwise. The per-point layers rely on this.
template <typename T>
void gemm_rows(std::size_t n, std::size_t k, std::size_t p, const T* x, const T* w,
               const T* bias, T* y);

/// c[m x p] (+)= a^T * b with a[n x m], b[n x p]. Used for weight gradients.
template <typename T>
void gemm_tn(std::size_t n, std::size_t m, std::size_t p, const T* a, const T* b, T* c,
             bool accumulate);

/// c[n x k] (+)= a[n x p] * b^T with b[k x p]. Used for input gradients.
template <typename T>
void gemm_nt(std::size_t n, std::size_t p, std::size_t k, const T* a, const T* b, T* c,
             bool accumulate);

}  // namespace simnet::ng
