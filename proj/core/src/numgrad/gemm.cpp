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

#include "simnet/numgrad/gemm.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cstring>
#include <vector>

namespace simnet::ng {

namespace {

constexpr std::size_t kRows = 4;
#if defined(__AVX512F__)
constexpr std::size_t kVecBytes = 64;
#else
constexpr std::size_t kVecBytes = 32;
#endif
constexpr std::size_t kVecsPerRow = 4;

typedef float VecF __attribute__((vector_size(kVecBytes), aligned(4), may_alias));
typedef double VecD __attribute__((vector_size(kVecBytes), aligned(8), may_alias));

template <typename T>
struct VecOf;
template <>
struct VecOf<float> {
  using type = VecF;
};
template <>
struct VecOf<double> {
  using type = VecD;
};

template <typename T>
using Vec = typename VecOf<T>::type;

template <typename T>
constexpr std::size_t kLanes = kVecBytes / sizeof(T);

template <typename T>
constexpr std::size_t kTile = kLanes<T> * kVecsPerRow;

// Full kRows x kTile block of y; the 16 accumulators are named locals so
// they stay in registers.
template <typename T>
inline void block_full(std::size_t k, std::size_t p, const std::array<const T*, kRows>& rows,
                       const T* w, const T* bias, const std::array<T*, kRows>& out) {
  using V = Vec<T>;
  constexpr std::size_t L = kLanes<T>;
  static_assert(kRows == 4 && kVecsPerRow == 4);
  V b0{}, b1{}, b2{}, b3{};
  if (bias) {
    b0 = *reinterpret_cast<const V*>(bias);
    b1 = *reinterpret_cast<const V*>(bias + L);
    b2 = *reinterpret_cast<const V*>(bias + 2 * L);
    b3 = *reinterpret_cast<const V*>(bias + 3 * L);
  }
  V a00 = b0, a01 = b1, a02 = b2, a03 = b3;
  V a10 = b0, a11 = b1, a12 = b2, a13 = b3;
  V a20 = b0, a21 = b1, a22 = b2, a23 = b3;
  V a30 = b0, a31 = b1, a32 = b2, a33 = b3;
  const T* x0 = rows[0];
  const T* x1 = rows[1];
  const T* x2 = rows[2];
  const T* x3 = rows[3];
  for (std::size_t kk = 0; kk < k; ++kk) {
    const T* wr = w + kk * p;
    const V w0 = *reinterpret_cast<const V*>(wr);
    const V w1 = *reinterpret_cast<const V*>(wr + L);
    const V w2 = *reinterpret_cast<const V*>(wr + 2 * L);
    const V w3 = *reinterpret_cast<const V*>(wr + 3 * L);
    const T s0 = x0[kk], s1 = x1[kk], s2 = x2[kk], s3 = x3[kk];
    a00 += s0 * w0; a01 += s0 * w1; a02 += s0 * w2; a03 += s0 * w3;
    a10 += s1 * w0; a11 += s1 * w1; a12 += s1 * w2; a13 += s1 * w3;
    a20 += s2 * w0; a21 += s2 * w1; a22 += s2 * w2; a23 += s2 * w3;
    a30 += s3 * w0; a31 += s3 * w1; a32 += s3 * w2; a33 += s3 * w3;
  }
  auto put = [](T* dst, const V& v0, const V& v1, const V& v2, const V& v3) {
    if (!dst) return;
    *reinterpret_cast<V*>(dst) = v0;
    *reinterpret_cast<V*>(dst + L) = v1;
    *reinterpret_cast<V*>(dst + 2 * L) = v2;
    *reinterpret_cast<V*>(dst + 3 * L) = v3;
  };
  put(out[0], a00, a01, a02, a03);
  put(out[1], a10, a11, a12, a13);
  put(out[2], a20, a21, a22, a23);
  put(out[3], a30, a31, a32, a33);
}

// Ragged column tile (width < kTile). Same arithmetic per element.
template <typename T>
inline void block_ragged(std::size_t k, std::size_t p, std::size_t width,
                         const std::array<const T*, kRows>& rows, const T* w, const T* bias,
                         const std::array<T*, kRows>& out) {
  alignas(64) T acc[kRows][kTile<T>];
  for (std::size_t r = 0; r < kRows; ++r) {
    for (std::size_t j = 0; j < width; ++j) acc[r][j] = bias ? bias[j] : T(0);
  }
  for (std::size_t kk = 0; kk < k; ++kk) {
    const T* wr = w + kk * p;
    for (std::size_t r = 0; r < kRows; ++r) {
      const T a = rows[r][kk];
      for (std::size_t j = 0; j < width; ++j) acc[r][j] += a * wr[j];
    }
  }
  for (std::size_t r = 0; r < kRows; ++r) {
    if (out[r]) std::memcpy(out[r], acc[r], width * sizeof(T));
  }
}

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

template <typename T>
void gemm_rows(std::size_t n, std::size_t k, std::size_t p, const T* x, const T* w,
               const T* bias, T* y) {
  constexpr std::size_t tile = kTile<T>;
  std::vector<T> pad(kRows * k, T(0));
  std::vector<T> packed(k * tile);
  for (std::size_t j0 = 0; j0 < p; j0 += tile) {
    const std::size_t width = std::min(tile, p - j0);
    for (std::size_t kk = 0; kk < k; ++kk) {
      std::memcpy(packed.data() + kk * tile, w + kk * p + j0, width * sizeof(T));
    }
    const T* bj = bias ? bias + j0 : nullptr;
    for (std::size_t i0 = 0; i0 < n; i0 += kRows) {
      std::array<const T*, kRows> rows{};
      std::array<T*, kRows> out{};
      const std::size_t live = std::min(kRows, n - i0);
      if (live == kRows) {
        for (std::size_t r = 0; r < kRows; ++r) {
          rows[r] = x + (i0 + r) * k;
          out[r] = y + (i0 + r) * p + j0;
        }
      } else {
        for (std::size_t r = 0; r < kRows; ++r) {
          if (r < live) {
            std::memcpy(pad.data() + r * k, x + (i0 + r) * k, k * sizeof(T));
            out[r] = y + (i0 + r) * p + j0;
          }
          rows[r] = pad.data() + r * k;
        }
      }
      if (width == tile) {
        block_full<T>(k, tile, rows, packed.data(), bj, out);
      } else {
        block_ragged<T>(k, tile, width, rows, packed.data(), bj, out);
      }
    }
  }
}

template <typename T>
void gemm_tn(std::size_t n, std::size_t m, std::size_t p, const T* a, const T* b, T* c,
             bool accumulate) {
  Eigen::Map<const RowMat<T>> A(a, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  Eigen::Map<const RowMat<T>> B(b, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::Map<RowMat<T>> C(c, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(p));
  if (accumulate) {
    C.noalias() += A.transpose() * B;
  } else {
    C.noalias() = A.transpose() * B;
  }
}

template <typename T>
void gemm_nt(std::size_t n, std::size_t p, std::size_t k, const T* a, const T* b, T* c,
             bool accumulate) {
  Eigen::Map<const RowMat<T>> A(a, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  Eigen::Map<const RowMat<T>> B(b, static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(p));
  Eigen::Map<RowMat<T>> C(c, static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  if (accumulate) {
    C.noalias() += A * B.transpose();
  } else {
    C.noalias() = A * B.transpose();
  }
}

template void gemm_rows<float>(std::size_t, std::size_t, std::size_t, const float*,
                               const float*, const float*, float*);
template void gemm_rows<double>(std::size_t, std::size_t, std::size_t, const double*,
                                const double*, const double*, double*);
template void gemm_tn<float>(std::size_t, std::size_t, std::size_t, const float*, const float*,
                             float*, bool);
template void gemm_tn<double>(std::size_t, std::size_t, std::size_t, const double*,
                              const double*, double*, bool);
template void gemm_nt<float>(std::size_t, std::size_t, std::size_t, const float*, const float*,
                             float*, bool);
template void gemm_nt<double>(std::size_t, std::size_t, std::size_t, const double*,
                              const double*, double*, bool);

}  // namespace simnet::ng
