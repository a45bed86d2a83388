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
#include <string_view>
#include <vector>

#include "agrl/geometry.hpp"

namespace agrl {

enum class FormatClass { Valid, Partial, Invalid };

std::string_view to_string(FormatClass c) noexcept;

// Parsed form of a policy rollout.
//
// Valid   : the whole string is `<answer>TEXT</answer><bbox>PAYLOAD</bbox>`
//           (whitespace-tolerant).
// Partial : exactly one block is retained. When both blocks are well formed
//           but the string is not strictly valid (wrong order, stray text),
//           the block that occurs first is kept.
// Invalid : neither block is well formed; all fields are empty.
struct ParsedResponse {
  std::string answer_text;
  std::vector<BBox> boxes;
  FormatClass format_class = FormatClass::Invalid;
  bool has_answer = false;
  bool has_bbox = false;
  std::vector<std::string> warnings;
};

// Total: never throws. Boxes are clamped to the canvas; boxes that become
// degenerate are dropped and reported in `warnings`.
ParsedResponse parse_response(std::string_view raw, const Canvas& canvas);

FormatClass classify_format(const ParsedResponse& p) noexcept;

// Canonical form, e.g. "<answer>mug</answer><bbox>[2,3,10,12]</bbox>".
std::string render_response(std::string_view answer, const std::vector<BBox>& boxes);

}  // namespace agrl
