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

#include "agrl/rewards.hpp"

#include "agrl/error.hpp"
#include "agrl/text_metrics.hpp"

namespace agrl {

void RewardWeights::validate() const {
  if (lambda_f < 0.0 || lambda_a < 0.0 || lambda_g < 0.0)
    throw ConfigError("reward weights must be nonnegative");
  if (lambda_f == 0.0 && lambda_a == 0.0 && lambda_g == 0.0)
    throw ConfigError("at least one reward weight must be positive");
}

double format_reward(const ParsedResponse& p) noexcept {
  switch (p.format_class) {
    case FormatClass::Valid:
      return 1.0;
    case FormatClass::Partial:
      return 0.5;
    case FormatClass::Invalid:
      return 0.0;
  }
  return 0.0;
}

double answer_reward(std::string_view pred, std::string_view gt) {
  if (gt.empty()) throw ValidationError("answer_reward: empty ground-truth answer");
  return static_cast<double>(exact_match(pred, gt)) + levenshtein_ratio(pred, gt);
}

double grounding_reward(const std::vector<BBox>& pred_boxes, const Mask& gt, const Canvas& canvas) {
  return mask_iou(rasterize_boxes(pred_boxes, canvas), gt);
}

RewardBreakdown total_reward(const ParsedResponse& p, std::string_view gt_answer,
                             const Mask& gt_mask, const RewardWeights& w) {
  RewardBreakdown r;
  r.weights = w;
  r.r_format = format_reward(p);
  r.r_answer = answer_reward(p.answer_text, gt_answer);
  r.r_ground = grounding_reward(p.boxes, gt_mask, gt_mask.canvas());
  r.total = w.lambda_f * r.r_format + w.lambda_a * r.r_answer + w.lambda_g * r.r_ground;
  return r;
}

}  // namespace agrl
