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

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agrl/rewards.hpp"
#include "agrl/synth_env.hpp"

namespace agrl {

nlohmann::json to_json(const Scene& s);
Scene scene_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnnotatedSample& s);
// Validates the scene and checks every stored mask against its entities.
AnnotatedSample sample_from_json(const nlohmann::json& j);

void write_dataset(const std::filesystem::path& path, const std::vector<AnnotatedSample>& samples);
std::vector<AnnotatedSample> read_dataset(const std::filesystem::path& path);

// train.jsonl / val.jsonl / test.jsonl under `dir`.
void write_splits(const std::filesystem::path& dir, const DatasetSplits& splits);
std::vector<AnnotatedSample> read_split(const std::filesystem::path& dir, const std::string& split);

struct RolloutRecord {
  std::string id;
  std::string scene_id;
  std::size_t query_index = 0;
  std::string raw_response;
};

std::vector<RolloutRecord> read_rollouts(const std::filesystem::path& path);
void write_rollouts(const std::filesystem::path& path, const std::vector<RolloutRecord>& records);

struct RewardRecord {
  std::string id;
  RewardBreakdown reward;
};

nlohmann::json to_json(const RewardRecord& r);

// Scores each rollout against the matching query of `samples`. Throws
// ValidationError for unknown scene ids or query indices.
std::vector<RewardRecord> score_rollouts(const std::vector<RolloutRecord>& rollouts,
                                         const std::vector<AnnotatedSample>& samples,
                                         const RewardWeights& weights);

// One JSON document per line, written with a trailing newline.
void write_jsonl(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace agrl
