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

#include <functional>

#include "agrl/tensor.hpp"

namespace agrl {

using ScalarFn = std::function<double(const Tensor&)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
// Throws NumericError if f returns a non-finite value.
Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double h = 1e-5);

// ||a - b||_2 / max(||a||_2, ||b||_2, floor). The floor keeps the ratio
// meaningful when both gradients are essentially zero.
double relative_error(std::span<const double> a, std::span<const double> b,
                      double floor = 1e-7);
double relative_error(const Tensor& a, const Tensor& b, double floor = 1e-7);

}  // namespace agrl
