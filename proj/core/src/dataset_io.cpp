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

#include "agrl/dataset_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "agrl/error.hpp"

namespace agrl {

using nlohmann::json;

namespace {

json box_json(const BBox& b) { return json::array({b.sx, b.sy, b.ex, b.ey}); }

BBox box_from(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ValidationError("box must be [sx,sy,ex,ey]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const Scene& s) {
  json regions = json::array();
  for (const Region& r : s.regions) regions.push_back({{"label", r.label}, {"box", box_json(r.box)}});
  return {{"canvas", {s.canvas.width, s.canvas.height}},
          {"regions", regions},
          {"interaction",
           {{"hand", s.interaction.hand_label}, {"verb", s.interaction.verb}, {"object", s.interaction.object_label}}}};
}

Scene scene_from_json(const json& j) {
  Scene s;
  const auto canvas = field<std::vector<int>>(j, "canvas");
  if (canvas.size() != 2) throw ValidationError("canvas must be [width,height]");
  s.canvas = {canvas[0], canvas[1]};
  for (const json& r : field<json>(j, "regions")) s.regions.push_back({field<std::string>(r, "label"), box_from(r.at("box"))});
  const json it = field<json>(j, "interaction");
  s.interaction = {field<std::string>(it, "hand"), field<std::string>(it, "verb"), field<std::string>(it, "object")};
  s.validate();
  return s;
}

json to_json(const AnnotatedSample& s) {
  json queries = json::array();
  for (const QueryCase& q : s.queries) {
    queries.push_back({{"kind", to_string(q.kind)},
                       {"query_text", q.query_text},
                       {"gt_answer", q.gt_answer},
                       {"gt_entities", q.gt_entities},
                       {"gt_mask_rle",
                        {{"width", q.gt_mask.width()}, {"height", q.gt_mask.height()}, {"counts", mask_to_rle(q.gt_mask)}}},
                       {"prompt", q.prompt}});
  }
  return {{"id", s.id},
          {"scene", to_json(s.scene)},
          {"analysis_text", s.analysis_text},
          {"analysis_prompt", s.analysis_prompt},
          {"queries", queries}};
}

AnnotatedSample sample_from_json(const json& j) {
  AnnotatedSample s;
  s.id = field<std::string>(j, "id");
  s.scene = scene_from_json(field<json>(j, "scene"));
  s.analysis_text = field<std::string>(j, "analysis_text");
  s.analysis_prompt = j.value("analysis_prompt", std::string());
  for (const json& q : field<json>(j, "queries")) {
    QueryCase c;
    c.kind = query_kind_from_string(field<std::string>(q, "kind"));
    c.query_text = field<std::string>(q, "query_text");
    c.gt_answer = field<std::string>(q, "gt_answer");
    c.gt_entities = field<std::vector<std::string>>(q, "gt_entities");
    const json rle = field<json>(q, "gt_mask_rle");
    c.gt_mask = mask_from_rle(field<std::vector<int>>(rle, "counts"), field<int>(rle, "width"), field<int>(rle, "height"));
    c.prompt = q.value("prompt", std::string());
    if (c.gt_mask != rasterize_boxes(c.gt_boxes(s.scene), s.scene.canvas))
      throw ValidationError("sample " + s.id + ": gt mask does not match its entities");
    s.queries.push_back(std::move(c));
  }
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
  std::string text;
  for (const json& r : rows) {
    text += r.dump();
    text += '\n';
  }
  write_text(path, text);
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_dataset(const std::filesystem::path& path, const std::vector<AnnotatedSample>& samples) {
  std::vector<json> rows;
  rows.reserve(samples.size());
  for (const auto& s : samples) rows.push_back(to_json(s));
  write_jsonl(path, rows);
}

std::vector<AnnotatedSample> read_dataset(const std::filesystem::path& path) {
  std::vector<AnnotatedSample> out;
  for (const json& j : read_jsonl(path)) out.push_back(sample_from_json(j));
  return out;
}

void write_splits(const std::filesystem::path& dir, const DatasetSplits& splits) {
  write_dataset(dir / "train.jsonl", splits.train);
  write_dataset(dir / "val.jsonl", splits.val);
  write_dataset(dir / "test.jsonl", splits.test);
}

std::vector<AnnotatedSample> read_split(const std::filesystem::path& dir, const std::string& split) {
  if (split != "train" && split != "val" && split != "test") throw ConfigError("unknown split '" + split + "'");
  const auto path = dir / (split + ".jsonl");
  if (!std::filesystem::exists(path)) throw IoError("dataset split not found: " + path.string());
  return read_dataset(path);
}

std::vector<RolloutRecord> read_rollouts(const std::filesystem::path& path) {
  std::vector<RolloutRecord> out;
  for (const json& j : read_jsonl(path)) {
    out.push_back({field<std::string>(j, "id"), field<std::string>(j, "scene_id"),
                   field<std::size_t>(j, "query_index"), field<std::string>(j, "raw_response")});
  }
  return out;
}

void write_rollouts(const std::filesystem::path& path, const std::vector<RolloutRecord>& records) {
  std::vector<json> rows;
  for (const auto& r : records)
    rows.push_back({{"id", r.id}, {"scene_id", r.scene_id}, {"query_index", r.query_index}, {"raw_response", r.raw_response}});
  write_jsonl(path, rows);
}

json to_json(const RewardRecord& r) {
  return {{"id", r.id},
          {"r_format", r.reward.r_format},
          {"r_answer", r.reward.r_answer},
          {"r_ground", r.reward.r_ground},
          {"total", r.reward.total}};
}

std::vector<RewardRecord> score_rollouts(const std::vector<RolloutRecord>& rollouts,
                                         const std::vector<AnnotatedSample>& samples,
                                         const RewardWeights& weights) {
  std::map<std::string, const AnnotatedSample*> by_id;
  for (const auto& s : samples) by_id[s.id] = &s;
  std::vector<RewardRecord> out;
  out.reserve(rollouts.size());
  for (const RolloutRecord& r : rollouts) {
    const auto it = by_id.find(r.scene_id);
    if (it == by_id.end()) throw ValidationError("rollout " + r.id + ": unknown scene '" + r.scene_id + "'");
    const AnnotatedSample& s = *it->second;
    if (r.query_index >= s.queries.size()) throw ValidationError("rollout " + r.id + ": query index out of range");
    const QueryCase& q = s.queries[r.query_index];
    const ParsedResponse p = parse_response(r.raw_response, s.scene.canvas);
    out.push_back({r.id, total_reward(p, q.gt_answer, q.gt_mask, weights)});
  }
  return out;
}

}  // namespace agrl
