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

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "agrl/geometry.hpp"
#include "agrl/rng.hpp"
#include "agrl/tensor.hpp"

namespace agrl {

inline constexpr std::array<std::string_view, 8> kAllLabels = {
    "left_hand", "right_hand", "mug", "bowl", "knife", "laptop", "drawer", "kettle"};
inline constexpr std::array<std::string_view, 6> kObjectLabels = {"mug",    "bowl",   "knife",
                                                                  "laptop", "drawer", "kettle"};
inline constexpr std::array<std::string_view, 6> kVerbs = {"grasp", "hold", "push", "cut", "open", "lift"};

inline constexpr std::string_view kAnalysisInstruction =
    "Please analyze the interactions of hands and objects in detail";

std::string gerund(std::string_view verb);
std::size_t label_index(std::string_view label);  // throws for unknown labels
bool is_hand(std::string_view label) noexcept;

struct Region {
  std::string label;
  BBox box;
  friend bool operator==(const Region&, const Region&) = default;
};

struct Interaction {
  std::string hand_label;  // left_hand | right_hand
  std::string verb;        // base form
  std::string object_label;
  friend bool operator==(const Interaction&, const Interaction&) = default;
};

struct Scene {
  Canvas canvas;
  std::vector<Region> regions;
  Interaction interaction;

  const Region* find(std::string_view label) const noexcept;
  // Throws ValidationError when the scene breaks its invariants.
  void validate() const;
  friend bool operator==(const Scene&, const Scene&) = default;
};

enum class QueryKind { NoTarget, SingleTarget, MultiTarget };
std::string_view to_string(QueryKind k) noexcept;
QueryKind query_kind_from_string(std::string_view s);

struct QueryCase {
  QueryKind kind = QueryKind::SingleTarget;
  std::string query_text;
  std::string gt_answer;
  std::vector<std::string> gt_entities;
  Mask gt_mask{1, 1};
  std::string prompt;

  std::vector<BBox> gt_boxes(const Scene& scene) const;
};

struct AnnotatedSample {
  std::string id;  // "scene_0007"
  Scene scene;
  std::string analysis_text;
  std::string analysis_prompt;
  std::vector<QueryCase> queries;
};

struct SynthConfig {
  Canvas canvas{64, 64};
  int min_box = 4;
  int position_jitter = 4;
  int max_retries = 1000;
};

// Hands sit in the lower half (egocentric view); each object label has its
// own nominal placement that is jittered per scene.
Scene generate_scene(RngStream& rng, const SynthConfig& cfg = {});

// One query of each kind.
std::vector<QueryCase> generate_queries(const Scene& scene, RngStream& rng, std::string_view scene_id = "");

// "The left hand is grasping the mug."
std::string analysis_text(const Interaction& it);

// "[INST] <Img>{scene_id}</Img> [{task}] {instruction} [/INST]"
std::string serialize_prompt(std::string_view scene_id, std::string_view task, std::string_view instruction);

std::string scene_id(std::size_t index);

// Pure in (seed, index).
AnnotatedSample generate_sample(std::uint64_t seed, std::size_t index, const SynthConfig& cfg = {});
std::vector<AnnotatedSample> generate_dataset(std::uint64_t seed, std::size_t n, const SynthConfig& cfg = {});

struct DatasetSplits {
  std::vector<AnnotatedSample> train, val, test;
};
// Contiguous 5:2:3 split by scene index.
DatasetSplits split_dataset(std::vector<AnnotatedSample> samples);

struct SceneEncoderConfig {
  std::size_t grid = 8;
  std::size_t output_dim = 128;
  std::uint64_t seed = 0x5EED0001;
};

// Frozen visual encoder: per-label occupancy grids (coverage fraction,
// scaled by 1.0 for regions taking part in the interaction and 0.5
// otherwise) plus a hand-pose code for the verb, through a fixed seeded
// linear projection.
class SceneEncoder {
 public:
  explicit SceneEncoder(SceneEncoderConfig cfg = {});

  const SceneEncoderConfig& config() const noexcept { return cfg_; }
  std::size_t raw_dim() const noexcept { return kAllLabels.size() * cfg_.grid * cfg_.grid + kVerbs.size(); }
  std::size_t output_dim() const noexcept { return cfg_.output_dim; }
  // Channel block [label * grid * grid, (label + 1) * grid * grid) holds one
  // label; the last kVerbs.size() entries are the pose code.
  Tensor occupancy(const Scene& scene) const;
  Tensor features(const Scene& scene) const;

 private:
  SceneEncoderConfig cfg_;
  Tensor projection_;  // [raw_dim x output_dim]
};

Tensor scene_features(const Scene& scene, const SceneEncoder& encoder);

}  // namespace agrl
