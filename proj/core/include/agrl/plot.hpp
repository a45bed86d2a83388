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

#include <string>
#include <vector>

#include "agrl/pipeline.hpp"

namespace agrl {

struct PlotOptions {
  std::string title = "stage-2 mean total reward";
  int width = 720;
  int height = 360;
  std::size_t smoothing_window = 20;  // trailing moving average; 0 disables
};

// Per-step mean reward as a polyline with its moving average. The output
// is a pure function of the inputs.
std::string reward_curve_svg(const std::vector<StepTelemetry>& telemetry, const PlotOptions& options = {});

}  // namespace agrl
