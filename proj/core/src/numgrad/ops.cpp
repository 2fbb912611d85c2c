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

#include "simnet/numgrad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "simnet/numgrad/gemm.hpp"

namespace simnet::ng {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;

template <typename T>
using BackwardFn = std::function<void(detail::Node<T>&)>;

// Wraps freshly computed values into a tensor and, when needed, records the
// adjoint. `fn` must only capture inputs, never the output itself.
template <typename T>
Tensor<T> record(Shape shape, std::vector<T> values, std::initializer_list<Tensor<T>> inputs,
                 BackwardFn<T> fn, const char* op) {
  check_finite<T>(values, op);
  Tensor<T> out(std::move(shape), std::move(values));
  if (!grad_enabled()) return out;
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in.requires_grad();
  if (!needs) return out;
  auto* node = out.node();
  node->requires_grad = true;
  for (const auto& in : inputs) {
    if (in.requires_grad()) node->parents.push_back(in.impl());
  }
  node->backward = std::move(fn);
  return out;
}

// Grad buffer of an input, or nullptr when it does not take gradients.
template <typename T>
T* grad_of(const NodePtr<T>& node) {
  if (!node || !node->requires_grad) return nullptr;
  node->ensure_grad();
  return node->grad.data();
}

template <typename T>
void require_rank(const Tensor<T>& x, std::size_t rank, const char* op) {
  if (!x.defined()) throw DimensionError(std::string(op) + ": undefined input");
  if (x.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_str(x.shape()));
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!a.defined() || !b.defined() || a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         (a.defined() ? shape_str(a.shape()) : "<undefined>") + " vs " +
                         (b.defined() ? shape_str(b.shape()) : "<undefined>"));
  }
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t n = a.dim(0), k = a.dim(1), p = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  std::vector<T> y(n * p);
  gemm_rows<T>(n, k, p, a.ptr(), b.ptr(), nullptr, y.data());
  auto an = a.impl(), bn = b.impl();
  return record<T>(
      {n, p}, std::move(y), {a, b},
      [an, bn, n, k, p](detail::Node<T>& self) {
        const T* gy = self.grad.data();
        if (T* ga = grad_of(an)) gemm_nt<T>(n, p, k, gy, bn->data.data(), ga, true);
        if (T* gb = grad_of(bn)) gemm_tn<T>(n, k, p, an->data.data(), gy, gb, true);
      },
      "matmul");
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  require_rank(x, 2, "linear");
  require_rank(w, 2, "linear");
  const std::size_t n = x.dim(0), k = x.dim(1), p = w.dim(1);
  if (w.dim(0) != k) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " vs weight " +
                         shape_str(w.shape()));
  }
  if (b.defined() && b.numel() != p) {
    throw DimensionError("linear: bias " + shape_str(b.shape()) + " vs weight " +
                         shape_str(w.shape()));
  }
  std::vector<T> y(n * p);
  gemm_rows<T>(n, k, p, x.ptr(), w.ptr(), b.defined() ? b.ptr() : nullptr, y.data());
  auto xn = x.impl(), wn = w.impl(), bn = b.impl();
  return record<T>(
      {n, p}, std::move(y), {x, w, b.defined() ? b : Tensor<T>()},
      [xn, wn, bn, n, k, p](detail::Node<T>& self) {
        const T* gy = self.grad.data();
        if (T* gx = grad_of(xn)) gemm_nt<T>(n, p, k, gy, wn->data.data(), gx, true);
        if (T* gw = grad_of(wn)) gemm_tn<T>(n, k, p, xn->data.data(), gy, gw, true);
        if (T* gb = grad_of(bn)) {
          for (std::size_t i = 0; i < n; ++i) {
            const T* row = gy + i * p;
            for (std::size_t j = 0; j < p; ++j) gb[j] += row[j];
          }
        }
      },
      "linear");
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> y(a.numel());
  auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] + bv[i];
  auto an = a.impl(), bn = b.impl();
  return record<T>(
      a.shape(), std::move(y), {a, b},
      [an, bn](detail::Node<T>& self) {
        const auto& g = self.grad;
        if (T* ga = grad_of(an)) {
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (T* gb = grad_of(bn)) {
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
      },
      "add");
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> y(a.numel());
  auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] - bv[i];
  auto an = a.impl(), bn = b.impl();
  return record<T>(
      a.shape(), std::move(y), {a, b},
      [an, bn](detail::Node<T>& self) {
        const auto& g = self.grad;
        if (T* ga = grad_of(an)) {
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (T* gb = grad_of(bn)) {
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
      },
      "sub");
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> y(a.numel());
  auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  auto an = a.impl(), bn = b.impl();
  return record<T>(
      a.shape(), std::move(y), {a, b},
      [an, bn](detail::Node<T>& self) {
        const auto& g = self.grad;
        if (T* ga = grad_of(an)) {
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bn->data[i];
        }
        if (T* gb = grad_of(bn)) {
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * an->data[i];
        }
      },
      "mul");
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  require_rank(a, a.defined() ? a.rank() : 1, "scale");
  std::vector<T> y(a.data().begin(), a.data().end());
  for (auto& v : y) v *= factor;
  auto an = a.impl();
  return record<T>(
      a.shape(), std::move(y), {a},
      [an, factor](detail::Node<T>& self) {
        T* ga = grad_of(an);
        for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += self.grad[i] * factor;
      },
      "scale");
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  return mul(a, a);
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  require_rank(x, x.defined() ? x.rank() : 1, "relu");
  auto xv = x.data();
  std::vector<T> y(xv.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] > T(0) ? xv[i] : T(0);
  auto xn = x.impl();
  return record<T>(
      x.shape(), std::move(y), {x},
      [xn](detail::Node<T>& self) {
        T* gx = grad_of(xn);
        const auto& xd = xn->data;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          if (xd[i] > T(0)) gx[i] += self.grad[i];
        }
      },
      "relu");
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  require_rank(x, x.defined() ? x.rank() : 1, "sigmoid");
  auto xv = x.data();
  std::vector<T> y(xv.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    // Split by sign so exp never overflows.
    const T v = xv[i];
    if (v >= T(0)) {
      y[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      y[i] = e / (T(1) + e);
    }
  }
  auto xn = x.impl();
  auto out = record<T>(x.shape(), std::move(y), {x}, nullptr, "sigmoid");
  if (out.requires_grad()) {
    // The adjoint needs the output values; capture them by copy to avoid a
    // self-reference.
    std::vector<T> yv(out.data().begin(), out.data().end());
    out.node()->backward = [xn, yv = std::move(yv)](detail::Node<T>& self) {
      T* gx = grad_of(xn);
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        gx[i] += self.grad[i] * yv[i] * (T(1) - yv[i]);
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  if (!x.defined() || x.rank() < 1) throw DimensionError("softmax: undefined input");
  const std::size_t c = x.shape().back();
  const std::size_t rows = x.numel() / c;
  auto xv = x.data();
  std::vector<T> y(xv.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.data() + r * c;
    T* out = y.data() + r * c;
    const T mx = *std::max_element(in, in + c);
    T total = 0;
    for (std::size_t j = 0; j < c; ++j) {
      out[j] = std::exp(in[j] - mx);
      total += out[j];
    }
    for (std::size_t j = 0; j < c; ++j) out[j] /= total;
  }
  auto xn = x.impl();
  auto out = record<T>(x.shape(), std::move(y), {x}, nullptr, "softmax");
  if (out.requires_grad()) {
    std::vector<T> yv(out.data().begin(), out.data().end());
    out.node()->backward = [xn, yv = std::move(yv), rows, c](detail::Node<T>& self) {
      T* gx = grad_of(xn);
      for (std::size_t r = 0; r < rows; ++r) {
        const T* s = yv.data() + r * c;
        const T* g = self.grad.data() + r * c;
        T dot = 0;
        for (std::size_t j = 0; j < c; ++j) dot += g[j] * s[j];
        for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += s[j] * (g[j] - dot);
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  if (!x.defined()) throw DimensionError("sum: undefined input");
  T total = 0;
  for (T v : x.data()) total += v;
  auto xn = x.impl();
  return record<T>(
      {1}, {total}, {x},
      [xn](detail::Node<T>& self) {
        T* gx = grad_of(xn);
        const T g = self.grad[0];
        for (std::size_t i = 0; i < xn->data.size(); ++i) gx[i] += g;
      },
      "sum");
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (!x.defined()) throw DimensionError("mean: undefined input");
  return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require_rank(x, 2, "transpose");
  const std::size_t r = x.dim(0), c = x.dim(1);
  std::vector<T> y(r * c);
  auto xv = x.data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) y[j * r + i] = xv[i * c + j];
  auto xn = x.impl();
  return record<T>(
      {c, r}, std::move(y), {x},
      [xn, r, c](detail::Node<T>& self) {
        T* gx = grad_of(xn);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += self.grad[j * r + i];
      },
      "transpose");
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (!x.defined() || shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + (x.defined() ? shape_str(x.shape()) : "<undefined>") +
                         " -> " + shape_str(shape));
  }
  std::vector<T> y(x.data().begin(), x.data().end());
  auto xn = x.impl();
  return record<T>(
      std::move(shape), std::move(y), {x},
      [xn](detail::Node<T>& self) {
        T* gx = grad_of(xn);
        for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
      },
      "reshape");
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  for (const auto& p : parts) require_rank(p, 2, "concat_cols");
  const std::size_t rows = parts.front().dim(0);
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.dim(0) != rows) {
      throw DimensionError("concat_cols: row mismatch " + shape_str(parts.front().shape()) +
                           " vs " + shape_str(p.shape()));
    }
    cols += p.dim(1);
  }
  std::vector<T> y(rows * cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t pc = p.dim(1);
    auto pv = p.data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pv.data() + r * pc, pc, y.data() + r * cols + offset);
    offset += pc;
  }
  std::vector<NodePtr<T>> nodes;
  for (const auto& p : parts) nodes.push_back(p.impl());
  Tensor<T> out(Shape{rows, cols}, std::move(y));
  check_finite<T>(out.data(), "concat_cols");
  bool needs = false;
  for (const auto& p : parts) needs = needs || p.requires_grad();
  if (grad_enabled() && needs) {
    auto* node = out.node();
    node->requires_grad = true;
    for (const auto& n : nodes) {
      if (n->requires_grad) node->parents.push_back(n);
    }
    node->backward = [nodes, rows, cols](detail::Node<T>& self) {
      std::size_t off = 0;
      for (const auto& n : nodes) {
        const std::size_t pc = n->shape[1];
        if (T* g = grad_of(n)) {
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < pc; ++j) g[r * pc + j] += self.grad[r * cols + off + j];
        }
        off += pc;
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& x, std::size_t begin, std::size_t end) {
  require_rank(x, 2, "slice_cols");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (begin >= end || end > cols) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of " + shape_str(x.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<T> y(rows * w);
  auto xv = x.data();
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(xv.data() + r * cols + begin, w, y.data() + r * w);
  auto xn = x.impl();
  return record<T>(
      {rows, w}, std::move(y), {x},
      [xn, rows, cols, begin, w](detail::Node<T>& self) {
        T* gx = grad_of(xn);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t j = 0; j < w; ++j) gx[r * cols + begin + j] += self.grad[r * w + j];
      },
      "slice_cols");
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var,
                     const BatchNormOptions& options, Mode mode) {
  if (!x.defined() || x.rank() < 2) throw DimensionError("batch_norm: expected rank >= 2");
  const std::size_t c = x.shape().back();
  const std::size_t n = x.numel() / c;
  const std::initializer_list<const Tensor<T>*> params{&gamma, &beta, &running_mean,
                                                        &running_var};
  for (const Tensor<T>* t : params) {
    if (!t->defined() || t->numel() != c) {
      throw DimensionError("batch_norm: parameter size does not match " + shape_str(x.shape()));
    }
  }
  if (!(options.eps > 0)) throw ContractError("batch_norm: eps must be positive");
  const T eps = static_cast<T>(options.eps);
  auto xv = x.data();
  auto gv = gamma.data(), bv = beta.data();
  std::vector<T> y(xv.size());
  std::vector<T> mu(c, T(0)), inv_std(c, T(0));

  if (mode == Mode::kTrain) {
    // Accumulate in double for stable statistics in 32-bit mode.
    std::vector<double> s(c, 0.0), ss(c, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const T* row = xv.data() + i * c;
      for (std::size_t j = 0; j < c; ++j) s[j] += row[j];
    }
    for (std::size_t j = 0; j < c; ++j) s[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const T* row = xv.data() + i * c;
      for (std::size_t j = 0; j < c; ++j) {
        const double d = row[j] - s[j];
        ss[j] += d * d;
      }
    }
    auto rm = running_mean.data(), rv = running_var.data();
    const double m = options.momentum;
    for (std::size_t j = 0; j < c; ++j) {
      const double var = ss[j] / static_cast<double>(n);
      mu[j] = static_cast<T>(s[j]);
      inv_std[j] = static_cast<T>(1.0 / std::sqrt(var + options.eps));
      const double unbiased = n > 1 ? ss[j] / static_cast<double>(n - 1) : var;
      rm[j] = static_cast<T>((1.0 - m) * rm[j] + m * s[j]);
      rv[j] = static_cast<T>((1.0 - m) * rv[j] + m * unbiased);
    }
  } else {
    auto rm = running_mean.data(), rv = running_var.data();
    for (std::size_t j = 0; j < c; ++j) {
      mu[j] = rm[j];
      inv_std[j] = T(1) / std::sqrt(rv[j] + eps);
    }
  }

  // Per-row affine map with per-column constants; row independent.
  std::vector<T> mul_c(c), add_c(c);
  for (std::size_t j = 0; j < c; ++j) {
    mul_c[j] = gv[j] * inv_std[j];
    add_c[j] = bv[j] - mu[j] * mul_c[j];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = xv.data() + i * c;
    T* out = y.data() + i * c;
    for (std::size_t j = 0; j < c; ++j) out[j] = row[j] * mul_c[j] + add_c[j];
  }

  auto xn = x.impl(), gn = gamma.impl(), bn = beta.impl();
  const bool train = mode == Mode::kTrain;
  return record<T>(
      x.shape(), std::move(y), {x, gamma, beta},
      [xn, gn, bn, mu = std::move(mu), inv_std = std::move(inv_std), n, c,
       train](detail::Node<T>& self) {
        const T* gy = self.grad.data();
        const T* xd = xn->data.data();
        const T* gd = gn->data.data();
        std::vector<T> sum_g(c, T(0)), sum_gx(c, T(0));
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < c; ++j) {
            const T g = gy[i * c + j];
            const T xhat = (xd[i * c + j] - mu[j]) * inv_std[j];
            sum_g[j] += g;
            sum_gx[j] += g * xhat;
          }
        }
        if (T* gg = grad_of(gn)) {
          for (std::size_t j = 0; j < c; ++j) gg[j] += sum_gx[j];
        }
        if (T* gb = grad_of(bn)) {
          for (std::size_t j = 0; j < c; ++j) gb[j] += sum_g[j];
        }
        if (T* gx = grad_of(xn)) {
          const T inv_n = T(1) / static_cast<T>(n);
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
              const T g = gy[i * c + j];
              const T k = gd[j] * inv_std[j];
              if (train) {
                const T xhat = (xd[i * c + j] - mu[j]) * inv_std[j];
                gx[i * c + j] += k * (g - inv_n * sum_g[j] - xhat * inv_n * sum_gx[j]);
              } else {
                gx[i * c + j] += k * g;
              }
            }
          }
        }
      },
      "batch_norm");
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Rng& rng, Mode mode) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ContractError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (!x.defined()) throw DimensionError("dropout: undefined input");
  if (mode == Mode::kEval || rate == 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.numel());
  for (auto& m : mask) m = rng.uniform() < rate ? T(0) : keep_scale;
  auto xv = x.data();
  std::vector<T> y(xv.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] * mask[i];
  auto xn = x.impl();
  return record<T>(
      x.shape(), std::move(y), {x},
      [xn, mask = std::move(mask)](detail::Node<T>& self) {
        T* gx = grad_of(xn);
        for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i] * mask[i];
      },
      "dropout");
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 const ConvOptions& options) {
  require_rank(x, 4, "conv2d");
  require_rank(w, 2, "conv2d");
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  const std::size_t K = options.kernel, S = options.stride, P = options.pad;
  if (K == 0 || S == 0) throw ContractError("conv2d: kernel and stride must be positive");
  if (w.dim(0) != K * K * C) {
    throw DimensionError("conv2d: weight " + shape_str(w.shape()) + " vs input " +
                         shape_str(x.shape()));
  }
  if (H + 2 * P < K || W + 2 * P < K) throw DimensionError("conv2d: kernel larger than input");
  const std::size_t O = w.dim(1);
  if (b.defined() && b.numel() != O) throw DimensionError("conv2d: bias size mismatch");
  const std::size_t Ho = (H + 2 * P - K) / S + 1, Wo = (W + 2 * P - K) / S + 1;
  const std::size_t rows = B * Ho * Wo, depth = K * K * C;

  auto xv = x.data();
  std::vector<T> cols(rows * depth, T(0));
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t oy = 0; oy < Ho; ++oy)
      for (std::size_t ox = 0; ox < Wo; ++ox) {
        T* dst = cols.data() + ((n * Ho + oy) * Wo + ox) * depth;
        for (std::size_t dy = 0; dy < K; ++dy) {
          const long iy = static_cast<long>(oy * S + dy) - static_cast<long>(P);
          if (iy < 0 || iy >= static_cast<long>(H)) continue;
          for (std::size_t dx = 0; dx < K; ++dx) {
            const long ix = static_cast<long>(ox * S + dx) - static_cast<long>(P);
            if (ix < 0 || ix >= static_cast<long>(W)) continue;
            std::copy_n(xv.data() + ((n * H + iy) * W + ix) * C, C, dst + (dy * K + dx) * C);
          }
        }
      }
  std::vector<T> y(rows * O);
  gemm_rows<T>(rows, depth, O, cols.data(), w.ptr(), b.defined() ? b.ptr() : nullptr, y.data());

  auto xn = x.impl(), wn = w.impl(), bn = b.impl();
  auto out = record<T>({B, Ho, Wo, O}, std::move(y), {x, w, b.defined() ? b : Tensor<T>()},
                       nullptr, "conv2d");
  if (out.requires_grad()) {
    out.node()->backward = [xn, wn, bn, cols = std::move(cols), B, H, W, C, K, S, P, Ho, Wo, O,
                            rows, depth](detail::Node<T>& self) {
      const T* gy = self.grad.data();
      if (T* gw = grad_of(wn)) gemm_tn<T>(rows, depth, O, cols.data(), gy, gw, true);
      if (T* gb = grad_of(bn)) {
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t o = 0; o < O; ++o) gb[o] += gy[r * O + o];
      }
      if (T* gx = grad_of(xn)) {
        std::vector<T> gcols(rows * depth);
        gemm_nt<T>(rows, O, depth, gy, wn->data.data(), gcols.data(), false);
        for (std::size_t n = 0; n < B; ++n)
          for (std::size_t oy = 0; oy < Ho; ++oy)
            for (std::size_t ox = 0; ox < Wo; ++ox) {
              const T* src = gcols.data() + ((n * Ho + oy) * Wo + ox) * depth;
              for (std::size_t dy = 0; dy < K; ++dy) {
                const long iy = static_cast<long>(oy * S + dy) - static_cast<long>(P);
                if (iy < 0 || iy >= static_cast<long>(H)) continue;
                for (std::size_t dx = 0; dx < K; ++dx) {
                  const long ix = static_cast<long>(ox * S + dx) - static_cast<long>(P);
                  if (ix < 0 || ix >= static_cast<long>(W)) continue;
                  T* dst = gx + ((n * H + iy) * W + ix) * C;
                  const T* s = src + (dy * K + dx) * C;
                  for (std::size_t ch = 0; ch < C; ++ch) dst[ch] += s[ch];
                }
              }
            }
      }
    };
  }
  return out;
}

template <typename T>
Tensor<T> avg_pool2(const Tensor<T>& x) {
  require_rank(x, 4, "avg_pool2");
  const std::size_t B = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  const std::size_t Ho = H / 2, Wo = W / 2;
  if (Ho == 0 || Wo == 0) throw DimensionError("avg_pool2: input " + shape_str(x.shape()));
  auto xv = x.data();
  std::vector<T> y(B * Ho * Wo * C);
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t oy = 0; oy < Ho; ++oy)
      for (std::size_t ox = 0; ox < Wo; ++ox) {
        T* dst = y.data() + ((n * Ho + oy) * Wo + ox) * C;
        const T* a = xv.data() + ((n * H + 2 * oy) * W + 2 * ox) * C;
        const T* b = a + C;
        const T* c = a + W * C;
        const T* d = c + C;
        for (std::size_t ch = 0; ch < C; ++ch) dst[ch] = T(0.25) * ((a[ch] + b[ch]) + (c[ch] + d[ch]));
      }
  auto xn = x.impl();
  return record<T>(
      {B, Ho, Wo, C}, std::move(y), {x},
      [xn, B, H, W, C, Ho, Wo](detail::Node<T>& self) {
        T* gx = grad_of(xn);
        for (std::size_t n = 0; n < B; ++n)
          for (std::size_t oy = 0; oy < Ho; ++oy)
            for (std::size_t ox = 0; ox < Wo; ++ox) {
              const T* g = self.grad.data() + ((n * Ho + oy) * Wo + ox) * C;
              T* a = gx + ((n * H + 2 * oy) * W + 2 * ox) * C;
              T* b = a + C;
              T* c = a + W * C;
              T* d = c + C;
              for (std::size_t ch = 0; ch < C; ++ch) {
                const T q = T(0.25) * g[ch];
                a[ch] += q;
                b[ch] += q;
                c[ch] += q;
                d[ch] += q;
              }
            }
      },
      "avg_pool2");
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  require_rank(x, 4, "global_avg_pool");
  const std::size_t B = x.dim(0), HW = x.dim(1) * x.dim(2), C = x.dim(3);
  auto xv = x.data();
  std::vector<T> y(B * C, T(0));
  const T inv = T(1) / static_cast<T>(HW);
  for (std::size_t n = 0; n < B; ++n) {
    T* dst = y.data() + n * C;
    for (std::size_t p = 0; p < HW; ++p) {
      const T* src = xv.data() + (n * HW + p) * C;
      for (std::size_t ch = 0; ch < C; ++ch) dst[ch] += src[ch];
    }
    for (std::size_t ch = 0; ch < C; ++ch) dst[ch] *= inv;
  }
  auto xn = x.impl();
  return record<T>(
      {B, C}, std::move(y), {x},
      [xn, B, HW, C, inv](detail::Node<T>& self) {
        T* gx = grad_of(xn);
        for (std::size_t n = 0; n < B; ++n)
          for (std::size_t p = 0; p < HW; ++p)
            for (std::size_t ch = 0; ch < C; ++ch)
              gx[(n * HW + p) * C + ch] += self.grad[n * C + ch] * inv;
      },
      "global_avg_pool");
}

template <typename T>
Tensor<T> set_max_pool(const Tensor<T>& x, std::size_t group_size) {
  require_rank(x, 2, "set_max_pool");
  if (group_size == 0) throw ContractError("set_max_pool: empty set");
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (n % group_size != 0) {
    throw DimensionError("set_max_pool: " + std::to_string(n) + " rows not divisible into sets of " +
                         std::to_string(group_size));
  }
  const std::size_t groups = n / group_size;
  auto xv = x.data();
  std::vector<T> y(groups * c);
  std::vector<std::size_t> arg(groups * c);
  for (std::size_t g = 0; g < groups; ++g) {
    const T* base = xv.data() + g * group_size * c;
    T* out = y.data() + g * c;
    std::size_t* am = arg.data() + g * c;
    std::copy_n(base, c, out);
    std::fill_n(am, c, g * group_size);
    for (std::size_t i = 1; i < group_size; ++i) {
      const T* row = base + i * c;
      for (std::size_t j = 0; j < c; ++j) {
        if (row[j] > out[j]) {
          out[j] = row[j];
          am[j] = g * group_size + i;
        }
      }
    }
  }
  auto xn = x.impl();
  return record<T>(
      {groups, c}, std::move(y), {x},
      [xn, arg = std::move(arg), c](detail::Node<T>& self) {
        T* gx = grad_of(xn);
        for (std::size_t q = 0; q < arg.size(); ++q) gx[arg[q] * c + q % c] += self.grad[q];
      },
      "set_max_pool");
}

template <typename T>
Tensor<T> group_matmul(const Tensor<T>& x, const Tensor<T>& a, std::size_t groups) {
  require_rank(x, 2, "group_matmul");
  require_rank(a, 2, "group_matmul");
  if (groups == 0 || x.dim(0) % groups != 0 || a.dim(0) % groups != 0) {
    throw DimensionError("group_matmul: " + shape_str(x.shape()) + " and " +
                         shape_str(a.shape()) + " do not split into " + std::to_string(groups) +
                         " groups");
  }
  const std::size_t m = x.dim(0) / groups, k = x.dim(1), p = a.dim(1);
  if (a.dim(0) / groups != k) {
    throw DimensionError("group_matmul: inner size mismatch " + shape_str(x.shape()) + " vs " +
                         shape_str(a.shape()));
  }
  std::vector<T> y(groups * m * p);
  for (std::size_t g = 0; g < groups; ++g) {
    gemm_rows<T>(m, k, p, x.ptr() + g * m * k, a.ptr() + g * k * p, nullptr,
                 y.data() + g * m * p);
  }
  auto xn = x.impl(), an = a.impl();
  return record<T>(
      {groups * m, p}, std::move(y), {x, a},
      [xn, an, groups, m, k, p](detail::Node<T>& self) {
        T* gx = grad_of(xn);
        T* ga = grad_of(an);
        for (std::size_t g = 0; g < groups; ++g) {
          const T* gy = self.grad.data() + g * m * p;
          if (gx) gemm_nt<T>(m, p, k, gy, an->data.data() + g * k * p, gx + g * m * k, true);
          if (ga) gemm_tn<T>(m, k, p, xn->data.data() + g * m * k, gy, ga + g * k * p, true);
        }
      },
      "group_matmul");
}

template <typename T>
AttentionResult<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                             std::size_t tokens) {
  require_rank(q, 2, "attention");
  require_rank(k, 2, "attention");
  require_rank(v, 2, "attention");
  const std::size_t B = q.dim(0), E = q.dim(1), S = tokens;
  if (S == 0 || k.dim(0) != B * S || v.dim(0) != B * S || k.dim(1) != E || v.dim(1) != E) {
    throw DimensionError("attention: query " + shape_str(q.shape()) + ", keys " +
                         shape_str(k.shape()) + ", values " + shape_str(v.shape()));
  }
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(E));
  auto qv = q.data(), kv = k.data(), vv = v.data();
  std::vector<T> weights(B * S), y(B * E, T(0));
  for (std::size_t b = 0; b < B; ++b) {
    T* wrow = weights.data() + b * S;
    for (std::size_t s = 0; s < S; ++s) {
      T dot = 0;
      for (std::size_t e = 0; e < E; ++e) dot += qv[b * E + e] * kv[(b * S + s) * E + e];
      wrow[s] = dot * inv_sqrt;
    }
    const T mx = *std::max_element(wrow, wrow + S);
    T total = 0;
    for (std::size_t s = 0; s < S; ++s) {
      wrow[s] = std::exp(wrow[s] - mx);
      total += wrow[s];
    }
    for (std::size_t s = 0; s < S; ++s) wrow[s] /= total;
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t e = 0; e < E; ++e) y[b * E + e] += wrow[s] * vv[(b * S + s) * E + e];
  }
  Tensor<T> wt({B, S}, weights);
  auto qn = q.impl(), kn = k.impl(), vn = v.impl();
  auto out = record<T>(
      {B, E}, std::move(y), {q, k, v},
      [qn, kn, vn, weights, B, E, S, inv_sqrt](detail::Node<T>& self) {
        T* gq = grad_of(qn);
        T* gk = grad_of(kn);
        T* gv = grad_of(vn);
        std::vector<T> gw(S), gs(S);
        for (std::size_t b = 0; b < B; ++b) {
          const T* g = self.grad.data() + b * E;
          const T* w = weights.data() + b * S;
          T wdot = 0;
          for (std::size_t s = 0; s < S; ++s) {
            T d = 0;
            for (std::size_t e = 0; e < E; ++e) d += g[e] * vn->data[(b * S + s) * E + e];
            gw[s] = d;
            wdot += w[s] * d;
            if (gv) {
              for (std::size_t e = 0; e < E; ++e) gv[(b * S + s) * E + e] += w[s] * g[e];
            }
          }
          for (std::size_t s = 0; s < S; ++s) gs[s] = w[s] * (gw[s] - wdot) * inv_sqrt;
          for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t e = 0; e < E; ++e) {
              if (gq) gq[b * E + e] += gs[s] * kn->data[(b * S + s) * E + e];
              if (gk) gk[(b * S + s) * E + e] += gs[s] * qn->data[b * E + e];
            }
          }
        }
      },
      "attention");
  return {out, wt};
}

template <typename T>
Tensor<T> orthogonality_penalty(const Tensor<T>& a, std::size_t k) {
  require_rank(a, 2, "orthogonality_penalty");
  if (k == 0 || a.dim(1) != k || a.dim(0) % k != 0) {
    throw DimensionError("orthogonality_penalty: " + shape_str(a.shape()) +
                         " is not a stack of square matrices of size " + std::to_string(k));
  }
  const std::size_t B = a.dim(0) / k;
  auto av = a.data();
  // E_b = A_b A_b^T - I, kept for the adjoint d/dA ||E||^2 = 4 E A.
  std::vector<T> e(B * k * k);
  T total = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const T* A = av.data() + b * k * k;
    T* Eb = e.data() + b * k * k;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        T d = 0;
        for (std::size_t t = 0; t < k; ++t) d += A[i * k + t] * A[j * k + t];
        if (i == j) d -= T(1);
        Eb[i * k + j] = d;
        total += d * d;
      }
  }
  const T inv_b = T(1) / static_cast<T>(B);
  auto an = a.impl();
  return record<T>(
      {1}, {total * inv_b}, {a},
      [an, e = std::move(e), B, k, inv_b](detail::Node<T>& self) {
        T* ga = grad_of(an);
        const T g = self.grad[0] * T(4) * inv_b;
        for (std::size_t b = 0; b < B; ++b) {
          const T* A = an->data.data() + b * k * k;
          const T* Eb = e.data() + b * k * k;
          for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
              T d = 0;
              for (std::size_t t = 0; t < k; ++t) d += Eb[i * k + t] * A[t * k + j];
              ga[b * k * k + i * k + j] += g * d;
            }
        }
      },
      "orthogonality_penalty");
}

template <typename T>
Tensor<T> bce_loss(const Tensor<T>& probs, std::span<const int> labels) {
  if (!probs.defined() || probs.numel() != labels.size()) {
    throw DimensionError("bce_loss: " + std::to_string(labels.size()) + " labels for " +
                         (probs.defined() ? shape_str(probs.shape()) : "<undefined>"));
  }
  if (labels.empty()) throw DimensionError("bce_loss: empty batch");
  for (int y : labels) {
    if (y != 0 && y != 1) throw LabelError("bce_loss: label " + std::to_string(y) + " not in {0, 1}");
  }
  constexpr T lo = T(1e-7), hi = T(1) - T(1e-7);
  const std::size_t n = labels.size();
  auto pv = probs.data();
  T total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T p = std::clamp(pv[i], lo, hi);
    total -= labels[i] ? std::log(p) : std::log(T(1) - p);
  }
  std::vector<int> ys(labels.begin(), labels.end());
  auto pn = probs.impl();
  return record<T>(
      {1}, {total / static_cast<T>(n)}, {probs},
      [pn, ys = std::move(ys), n](detail::Node<T>& self) {
        T* gp = grad_of(pn);
        const T g = self.grad[0] / static_cast<T>(n);
        for (std::size_t i = 0; i < n; ++i) {
          const T p = pn->data[i];
          if (p < lo || p > hi) continue;  // clamped region is flat
          gp[i] += ys[i] ? -g / p : g / (T(1) - p);
        }
      },
      "bce_loss");
}

template <typename T>
Tensor<T> softmax_ce_loss(const Tensor<T>& logits, std::span<const int> labels) {
  require_rank(logits, 2, "softmax_ce_loss");
  const std::size_t n = logits.dim(0), c = logits.dim(1);
  if (labels.size() != n) {
    throw DimensionError("softmax_ce_loss: " + std::to_string(labels.size()) + " labels for " +
                         shape_str(logits.shape()));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw LabelError("softmax_ce_loss: label " + std::to_string(y) + " outside [0, " +
                       std::to_string(c) + ")");
    }
  }
  auto lv = logits.data();
  std::vector<T> prob(n * c);
  T total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = lv.data() + i * c;
    const T mx = *std::max_element(row, row + c);
    T z = 0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    const T log_z = std::log(z) + mx;
    for (std::size_t j = 0; j < c; ++j) prob[i * c + j] = std::exp(row[j] - log_z);
    total += log_z - row[labels[i]];
  }
  std::vector<int> ys(labels.begin(), labels.end());
  auto ln = logits.impl();
  return record<T>(
      {1}, {total / static_cast<T>(n)}, {logits},
      [ln, prob = std::move(prob), ys = std::move(ys), n, c](detail::Node<T>& self) {
        T* gl = grad_of(ln);
        const T g = self.grad[0] / static_cast<T>(n);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < c; ++j)
            gl[i * c + j] += g * (prob[i * c + j] - (static_cast<int>(j) == ys[i] ? T(1) : T(0)));
      },
      "softmax_ce_loss");
}

#define SIMNET_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                  \
  template Tensor<T> scale(const Tensor<T>&, T);                                               \
  template Tensor<T> square(const Tensor<T>&);                                                 \
  template Tensor<T> relu(const Tensor<T>&);                                                   \
  template Tensor<T> sigmoid(const Tensor<T>&);                                                \
  template Tensor<T> softmax(const Tensor<T>&);                                                \
  template Tensor<T> sum(const Tensor<T>&);                                                    \
  template Tensor<T> mean(const Tensor<T>&);                                                   \
  template Tensor<T> transpose(const Tensor<T>&);                                              \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                         \
  template Tensor<T> concat_cols(const std::vector<Tensor<T>>&);                               \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);                   \
  template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,          \
                                Tensor<T>&, Tensor<T>&, const BatchNormOptions&, Mode);        \
  template Tensor<T> dropout(const Tensor<T>&, double, Rng&, Mode);                            \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,              \
                            const ConvOptions&);                                               \
  template Tensor<T> avg_pool2(const Tensor<T>&);                                              \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                        \
  template Tensor<T> set_max_pool(const Tensor<T>&, std::size_t);                              \
  template Tensor<T> group_matmul(const Tensor<T>&, const Tensor<T>&, std::size_t);            \
  template AttentionResult<T> attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                        std::size_t);                                          \
  template Tensor<T> orthogonality_penalty(const Tensor<T>&, std::size_t);                     \
  template Tensor<T> bce_loss(const Tensor<T>&, std::span<const int>);                         \
  template Tensor<T> softmax_ce_loss(const Tensor<T>&, std::span<const int>);

SIMNET_INSTANTIATE_OPS(float)
SIMNET_INSTANTIATE_OPS(double)

#undef SIMNET_INSTANTIATE_OPS

}  // namespace simnet::ng
