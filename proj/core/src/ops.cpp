// Copyright 2026 The agrl Authors. All Rights Reserved.
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

#include "agrl/ops.hpp"

#include <algorithm>
#include <cmath>

#include "agrl/error.hpp"

namespace agrl {

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) throw DimensionError("matmul expects rank-2 tensors");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ " + a.shape_string() + " * " +
                         b.shape_string());
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) vecmat_accum(a.row(i), b, out.row(i));
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) throw DimensionError("transpose expects a rank-2 tensor");
  Tensor out({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

LayerNormRow layer_norm_row(std::span<const double> x, std::span<const double> gamma,
                            std::span<const double> beta, double eps,
                            std::span<double> out) {
  const std::size_t d = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d);

  LayerNormRow cache;
  cache.normalized.resize(d);
  // eps regularizes zero-variance rows; with var == 0 and eps == 0 the
  // centered row is all zeros and we leave it at zero.
  const double denom = std::sqrt(var + eps);
  cache.inv_std = denom > 0.0 ? 1.0 / denom : 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    cache.normalized[i] = (x[i] - mean) * cache.inv_std;
    out[i] = gamma[i] * cache.normalized[i] + beta[i];
  }
  return cache;
}

void layer_norm_row_backward(const LayerNormRow& cache, std::span<const double> gamma,
                             std::span<const double> grad_out, std::span<double> grad_x,
                             std::span<double> grad_gamma, std::span<double> grad_beta) {
  const std::size_t d = cache.normalized.size();
  const double n = static_cast<double>(d);
  double sum_g = 0.0, sum_gx = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double g = grad_out[i] * gamma[i];
    sum_g += g;
    sum_gx += g * cache.normalized[i];
    grad_gamma[i] += grad_out[i] * cache.normalized[i];
    grad_beta[i] += grad_out[i];
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double g = grad_out[i] * gamma[i];
    grad_x[i] = cache.inv_std * (g - sum_g / n - cache.normalized[i] * sum_gx / n);
  }
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  if (x.rank() == 0) throw DimensionError("layer_norm: empty input");
  const std::size_t d = x.shape().back();
  if (gamma.size() != d || beta.size() != d) {
    throw DimensionError("layer_norm: gamma/beta must match the last axis");
  }
  Tensor out(x.shape());
  const std::size_t rows = x.size() / d;
  for (std::size_t r = 0; r < rows; ++r) {
    layer_norm_row(x.data().subspan(r * d, d), gamma.data(), beta.data(), eps,
                   out.data().subspan(r * d, d));
  }
  return out;
}

namespace {

struct MapDims {
  std::size_t h, w;
};

MapDims map_dims(const Tensor& x) {
  if (x.rank() == 2) return {x.dim(0), x.dim(1)};
  if (x.rank() == 3 && x.dim(0) == 1) return {x.dim(1), x.dim(2)};
  throw DimensionError("conv2d_3x3 expects [h x w] or [1 x h x w], got " + x.shape_string());
}

void check_kernel(const Tensor& kernel) {
  if (kernel.rank() != 2 || kernel.dim(0) != 3 || kernel.dim(1) != 3)
    throw DimensionError("conv2d_3x3 kernel must be [3 x 3]");
}

}  // namespace

Tensor conv2d_3x3(const Tensor& x, const Tensor& kernel, double bias) {
  const auto [h, w] = map_dims(x);
  check_kernel(kernel);
  Tensor out(x.shape());
  const auto in = x.data();
  auto o = out.data();
  const auto k = kernel.data();
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      double acc = bias;
      for (std::size_t a = 0; a < 3; ++a) {
        const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + a) - 1;
        if (r < 0 || r >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t b = 0; b < 3; ++b) {
          const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(j + b) - 1;
          if (c < 0 || c >= static_cast<std::ptrdiff_t>(w)) continue;
          acc += k[a * 3 + b] * in[static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c)];
        }
      }
      o[i * w + j] = acc;
    }
  }
  return out;
}

Conv2dGrads conv2d_3x3_backward(const Tensor& x, const Tensor& kernel,
                                const Tensor& grad_out) {
  const auto [h, w] = map_dims(x);
  check_kernel(kernel);
  if (grad_out.size() != x.size()) throw DimensionError("conv2d_3x3_backward: grad shape");
  Conv2dGrads g{Tensor(x.shape()), Tensor({3, 3}), 0.0};
  const auto in = x.data();
  const auto go = grad_out.data();
  const auto k = kernel.data();
  auto gx = g.grad_x.data();
  auto gk = g.grad_kernel.data();
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const double gij = go[i * w + j];
      g.grad_bias += gij;
      for (std::size_t a = 0; a < 3; ++a) {
        const std::ptrdiff_t r = static_cast<std::ptrdiff_t>(i + a) - 1;
        if (r < 0 || r >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t b = 0; b < 3; ++b) {
          const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(j + b) - 1;
          if (c < 0 || c >= static_cast<std::ptrdiff_t>(w)) continue;
          const std::size_t idx = static_cast<std::size_t>(r) * w + static_cast<std::size_t>(c);
          gk[a * 3 + b] += gij * in[idx];
          gx[idx] += gij * k[a * 3 + b];
        }
      }
    }
  }
  return g;
}

double log_softmax_inplace(std::span<double> z) {
  double mx = z[0];
  for (double v : z) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : z) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  for (double& v : z) v -= lse;
  return lse;
}

Tensor softmax_rows(const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("softmax_rows expects a rank-2 tensor");
  Tensor y = x;
  for (std::size_t i = 0; i < y.dim(0); ++i) {
    auto r = y.row(i);
    double mx = r[0];
    for (double v : r) mx = std::max(mx, v);
    double s = 0.0;
    for (double& v : r) {
      v = std::exp(v - mx);
      s += v;
    }
    for (double& v : r) v /= s;
  }
  return y;
}

Tensor softmax_rows_backward(const Tensor& y, const Tensor& grad_y) {
  if (!y.same_shape(grad_y)) throw DimensionError("softmax_rows_backward: shape mismatch");
  Tensor gx(y.shape());
  for (std::size_t i = 0; i < y.dim(0); ++i) {
    const auto yr = y.row(i);
    const auto gr = grad_y.row(i);
    const double s = dot(yr, gr);
    auto out = gx.row(i);
    for (std::size_t j = 0; j < yr.size(); ++j) out[j] = yr[j] * (gr[j] - s);
  }
  return gx;
}

void vecmat_accum(std::span<const double> x, const Tensor& w, std::span<double> out) {
  const std::size_t k = w.dim(0), n = w.dim(1);
  if (x.size() != k || out.size() != n) throw DimensionError("vecmat_accum: shape mismatch");
  const double* wp = w.data().data();
  double* op = out.data();
  for (std::size_t i = 0; i < k; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* wr = wp + i * n;
    for (std::size_t j = 0; j < n; ++j) op[j] += xi * wr[j];
  }
}

void matvec_accum(const Tensor& w, std::span<const double> g, std::span<double> out) {
  const std::size_t k = w.dim(0), n = w.dim(1);
  if (g.size() != n || out.size() != k) throw DimensionError("matvec_accum: shape mismatch");
  const double* wp = w.data().data();
  for (std::size_t i = 0; i < k; ++i) {
    const double* wr = wp + i * n;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += wr[j] * g[j];
    out[i] += acc;
  }
}

void outer_accum(std::span<const double> x, std::span<const double> g, Tensor& grad_w) {
  const std::size_t k = grad_w.dim(0), n = grad_w.dim(1);
  if (x.size() != k || g.size() != n) throw DimensionError("outer_accum: shape mismatch");
  double* gp = grad_w.data().data();
  for (std::size_t i = 0; i < k; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    double* gr = gp + i * n;
    for (std::size_t j = 0; j < n; ++j) gr[j] += xi * g[j];
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace agrl
