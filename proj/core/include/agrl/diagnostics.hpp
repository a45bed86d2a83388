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

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "agrl/fusion.hpp"
#include "agrl/gradcheck.hpp"
#include "agrl/grpo.hpp"
#include "agrl/params.hpp"

namespace agrl {

// Central-difference gradient of f over every scalar of a parameter struct,
// returned in flatten() order.
template <ParamStruct P>
std::vector<double> finite_diff_params(const P& params, const std::function<double(const P&)>& f, double h = 1e-5) {
  P work = params;
  std::vector<double> grad;
  grad.reserve(parameter_count(params));
  for (Tensor* t : tensors_of(work)) {
    for (double& v : t->data()) {
      const double x0 = v;
      v = x0 + h;
      const double fp = f(work);
      v = x0 - h;
      const double fm = f(work);
      v = x0;
      if (!std::isfinite(fp) || !std::isfinite(fm)) throw NumericError("finite_diff_params: non-finite objective");
      grad.push_back((fp - fm) / (2.0 * h));
    }
  }
  return grad;
}

// Small random stage-2 problem: two groups, tiny vocabulary, perturbed old
// log-probabilities (so some ratios are clipped) and a reference policy that
// differs from the current one.
struct ToyGrpoProblem {
  GroupBatch batch;
  ResponsePolicy current;
  ResponsePolicy reference;
  GrpoConfig config;
};

ToyGrpoProblem make_toy_grpo(std::uint64_t seed, FusionKind fusion = FusionKind::Afs, std::size_t groups = 2,
                             std::size_t group_size = 3);

// Fills every fusion parameter (including zero-initialized output
// projections) with U(-scale, scale).
void randomize(FusionParams& p, RngStream& rng, double scale = 0.5);

struct GradcheckCase {
  std::string name;
  double rel_error = 0.0;
  double tolerance = 1e-4;
  bool passed() const noexcept { return rel_error < tolerance; }
};

// Every finite-difference suite: ops, sequence model, each fusion variant
// and the stage-2 objective, on `instances` random problems each.
std::vector<GradcheckCase> run_gradcheck_suite(std::uint64_t seed, std::size_t instances = 3);

}  // namespace agrl
