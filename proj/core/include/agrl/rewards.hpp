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

#include <string_view>
#include <vector>

#include "agrl/geometry.hpp"
#include "agrl/parser.hpp"

namespace agrl {

struct RewardWeights {
  double lambda_f = 1.0;
  double lambda_a = 1.0;
  double lambda_g = 1.0;

  void validate() const;
  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

struct RewardBreakdown {
  double r_format = 0.0;  // {0, 0.5, 1}
  double r_answer = 0.0;  // [0, 2]
  double r_ground = 0.0;  // [0, 1]
  double total = 0.0;
  RewardWeights weights;
};

double format_reward(const ParsedResponse& p) noexcept;
// ExactMatch + Levenshtein ratio. Throws ValidationError on empty gt.
double answer_reward(std::string_view pred, std::string_view gt);
double grounding_reward(const std::vector<BBox>& pred_boxes, const Mask& gt, const Canvas& canvas);

// Weighted sum. Invalid responses are not zeroed; each term is computed on
// whatever (possibly empty) fields were parsed.
RewardBreakdown total_reward(const ParsedResponse& p, std::string_view gt_answer,
                             const Mask& gt_mask, const RewardWeights& w);

}  // namespace agrl
