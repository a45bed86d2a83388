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

#pragma once

#include <span>

#include "agrl/tensor.hpp"

namespace agrl {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Layer normalization over the last axis.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

// Per-row layer norm with the statistics needed for the backward pass.
struct LayerNormRow {
  std::vector<double> normalized;  // (x - mean) / sqrt(var + eps)
  double inv_std = 0.0;
};
LayerNormRow layer_norm_row(std::span<const double> x, std::span<const double> gamma,
                            std::span<const double> beta, double eps,
                            std::span<double> out);
// Accumulates into grad_gamma / grad_beta and writes grad_x.
void layer_norm_row_backward(const LayerNormRow& cache, std::span<const double> gamma,
                             std::span<const double> grad_out, std::span<double> grad_x,
                             std::span<double> grad_gamma, std::span<double> grad_beta);

// Same-size 3x3 cross-correlation with zero padding and stride 1. Accepts a
// [h x w] or [1 x h x w] input and returns the same shape.
Tensor conv2d_3x3(const Tensor& x, const Tensor& kernel, double bias);

struct Conv2dGrads {
  Tensor grad_x;
  Tensor grad_kernel;
  double grad_bias = 0.0;
};
Conv2dGrads conv2d_3x3_backward(const Tensor& x, const Tensor& kernel,
                                const Tensor& grad_out);

// Row-wise softmax of an [m x n] tensor; subtracts the row max first.
Tensor softmax_rows(const Tensor& x);
Tensor softmax_rows_backward(const Tensor& y, const Tensor& grad_y);

// In-place numerically stable log-softmax; returns log-sum-exp.
double log_softmax_inplace(std::span<double> z);

// out += x * W    (x: [k], W: [k x n], out: [n])
void vecmat_accum(std::span<const double> x, const Tensor& w, std::span<double> out);
// out += W * g    (W: [k x n], g: [n], out: [k]); the transpose product.
void matvec_accum(const Tensor& w, std::span<const double> g, std::span<double> out);
// grad_w += x^T g (outer product accumulation)
void outer_accum(std::span<const double> x, std::span<const double> g, Tensor& grad_w);

void axpy(double alpha, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace agrl
