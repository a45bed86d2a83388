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

#include "agrl/synth_env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "agrl/error.hpp"
#include "agrl/ops.hpp"

namespace agrl {

std::string gerund(std::string_view verb) {
  if (verb == "cut") return "cutting";
  return std::string(verb) + "ing";
}

std::size_t label_index(std::string_view label) {
  for (std::size_t i = 0; i < kAllLabels.size(); ++i)
    if (kAllLabels[i] == label) return i;
  throw ValidationError("unknown region label '" + std::string(label) + "'");
}

bool is_hand(std::string_view label) noexcept { return label == "left_hand" || label == "right_hand"; }

std::string_view to_string(QueryKind k) noexcept {
  switch (k) {
    case QueryKind::NoTarget:
      return "no_target";
    case QueryKind::SingleTarget:
      return "single_target";
    case QueryKind::MultiTarget:
      return "multi_target";
  }
  return "single_target";
}

QueryKind query_kind_from_string(std::string_view s) {
  for (QueryKind k : {QueryKind::NoTarget, QueryKind::SingleTarget, QueryKind::MultiTarget})
    if (to_string(k) == s) return k;
  throw ValidationError("unknown query kind '" + std::string(s) + "'");
}

const Region* Scene::find(std::string_view label) const noexcept {
  for (const Region& r : regions)
    if (r.label == label) return &r;
  return nullptr;
}

void Scene::validate() const {
  int left = 0, right = 0, objects = 0;
  for (const Region& r : regions) {
    label_index(r.label);
    if (!r.box.within(canvas)) throw ValidationError("region '" + r.label + "' lies outside the canvas");
    if (r.label == "left_hand") ++left;
    else if (r.label == "right_hand") ++right;
    else ++objects;
    for (const Region& o : regions)
      if (&o != &r && o.label == r.label) throw ValidationError("duplicate region label '" + r.label + "'");
  }
  if (left != 1 || right != 1) throw ValidationError("scene needs exactly one left and one right hand");
  if (objects < 1 || objects > 3) throw ValidationError("scene needs 1-3 object regions");
  if (!is_hand(interaction.hand_label)) throw ValidationError("interaction must involve a hand");
  if (std::find(kVerbs.begin(), kVerbs.end(), interaction.verb) == kVerbs.end())
    throw ValidationError("unknown interaction verb '" + interaction.verb + "'");
  const Region* obj = find(interaction.object_label);
  if (obj == nullptr || is_hand(obj->label)) throw ValidationError("interaction object is not in the scene");
}

namespace {

struct Nominal {
  double cx, cy, w, h;
};

// Indexed like kAllLabels, in 64x64 canvas units.
constexpr std::array<Nominal, 8> kNominal = {{
    {16, 50, 22, 18},  // left_hand
    {48, 50, 22, 18},  // right_hand
    {14, 24, 14, 16},  // mug
    {46, 22, 20, 14},  // bowl
    {32, 36, 22, 10},  // knife
    {32, 12, 30, 18},  // laptop
    {12, 40, 20, 16},  // drawer
    {52, 32, 16, 18},  // kettle
}};

std::optional<BBox> place(std::string_view label, RngStream& rng, const SynthConfig& cfg) {
  const Nominal n = kNominal[label_index(label)];
  const double sx_scale = cfg.canvas.width / 64.0, sy_scale = cfg.canvas.height / 64.0;
  const int w = static_cast<int>(std::lround(n.w * sx_scale * rng.uniform(0.8, 1.2)));
  const int h = static_cast<int>(std::lround(n.h * sy_scale * rng.uniform(0.8, 1.2)));
  const int cx = static_cast<int>(std::lround(n.cx * sx_scale)) +
                 static_cast<int>(rng.uniform_int(-cfg.position_jitter, cfg.position_jitter));
  const int cy = static_cast<int>(std::lround(n.cy * sy_scale)) +
                 static_cast<int>(rng.uniform_int(-cfg.position_jitter, cfg.position_jitter));
  BBox b{std::max(0, cx - w / 2), std::max(0, cy - h / 2), 0, 0};
  b.ex = std::min(cfg.canvas.width, b.sx + w);
  b.ey = std::min(cfg.canvas.height, b.sy + h);
  if (b.width() < cfg.min_box || b.height() < cfg.min_box) return std::nullopt;
  return b;
}

}  // namespace

Scene generate_scene(RngStream& rng, const SynthConfig& cfg) {
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    Scene s;
    s.canvas = cfg.canvas;
    std::vector<std::string_view> labels{"left_hand", "right_hand"};
    std::vector<std::string_view> pool(kObjectLabels.begin(), kObjectLabels.end());
    const auto n_objects = static_cast<std::size_t>(rng.uniform_int(1, 3));
    for (std::size_t i = 0; i < n_objects; ++i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                              static_cast<std::int64_t>(pool.size() - 1)));
      std::swap(pool[i], pool[j]);
      labels.push_back(pool[i]);
    }
    bool ok = true;
    for (std::string_view l : labels) {
      const auto box = place(l, rng, cfg);
      if (!box) {
        ok = false;
        break;
      }
      s.regions.push_back({std::string(l), *box});
    }
    if (!ok) continue;
    s.interaction.hand_label = rng.uniform_int(0, 1) == 0 ? "left_hand" : "right_hand";
    s.interaction.verb = std::string(kVerbs[static_cast<std::size_t>(rng.uniform_int(0, kVerbs.size() - 1))]);
    s.interaction.object_label =
        std::string(labels[2 + static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n_objects) - 1))]);
    s.validate();
    return s;
  }
  throw GenerationError("generate_scene: exceeded retry budget");
}

namespace {

std::string hand_word(std::string_view hand_label) { return hand_label == "left_hand" ? "left" : "right"; }

QueryCase make_query(const Scene& scene, QueryKind kind, std::string text, std::string answer,
                     std::vector<std::string> entities, std::string_view sid) {
  QueryCase q;
  q.kind = kind;
  q.query_text = std::move(text);
  q.gt_answer = std::move(answer);
  q.gt_entities = std::move(entities);
  q.gt_mask = rasterize_boxes(q.gt_boxes(scene), scene.canvas);
  q.prompt = serialize_prompt(sid, "query", q.query_text);
  return q;
}

}  // namespace

std::vector<BBox> QueryCase::gt_boxes(const Scene& scene) const {
  std::vector<BBox> boxes;
  for (const std::string& e : gt_entities) {
    const Region* r = scene.find(e);
    if (r == nullptr) throw ValidationError("ground-truth entity '" + e + "' is not in the scene");
    boxes.push_back(r->box);
  }
  return boxes;
}

std::vector<QueryCase> generate_queries(const Scene& scene, RngStream& rng, std::string_view sid) {
  const Interaction& it = scene.interaction;
  std::vector<QueryCase> out;

  if (rng.uniform_int(0, 1) == 0) {
    const Region& r = scene.regions[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(scene.regions.size()) - 1))];
    out.push_back(make_query(scene, QueryKind::SingleTarget, "Segment the " + r.label + ".", r.label, {r.label}, sid));
  } else {
    out.push_back(make_query(scene, QueryKind::SingleTarget,
                             "Which object is the " + hand_word(it.hand_label) + " hand " + gerund(it.verb) + "?",
                             it.object_label, {it.object_label}, sid));
  }

  out.push_back(make_query(scene, QueryKind::MultiTarget,
                           "Segment the " + hand_word(it.hand_label) + " hand and the " + it.object_label + ".",
                           it.hand_label + " and " + it.object_label, {it.hand_label, it.object_label}, sid));

  std::vector<std::string_view> absent;
  for (std::string_view o : kObjectLabels)
    if (scene.find(o) == nullptr) absent.push_back(o);
  const std::string_view noun =
      absent[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(absent.size()) - 1))];
  out.push_back(make_query(scene, QueryKind::NoTarget, "Is there a " + std::string(noun) + "?", "none", {}, sid));
  return out;
}

std::string analysis_text(const Interaction& it) {
  return "The " + hand_word(it.hand_label) + " hand is " + gerund(it.verb) + " the " + it.object_label + ".";
}

std::string serialize_prompt(std::string_view sid, std::string_view task, std::string_view instruction) {
  std::string s = "[INST] <Img>";
  s += sid;
  s += "</Img> [";
  s += task;
  s += "] ";
  s += instruction;
  s += " [/INST]";
  return s;
}

std::string scene_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%04zu", index);
  return buf;
}

AnnotatedSample generate_sample(std::uint64_t seed, std::size_t index, const SynthConfig& cfg) {
  RngStream rng = RngStream(seed, 0x5CE4E).substream(static_cast<std::uint64_t>(index));
  AnnotatedSample s;
  s.id = scene_id(index);
  s.scene = generate_scene(rng, cfg);
  s.analysis_text = analysis_text(s.scene.interaction);
  s.analysis_prompt = serialize_prompt(s.id, "analysis", kAnalysisInstruction);
  s.queries = generate_queries(s.scene, rng, s.id);
  return s;
}

std::vector<AnnotatedSample> generate_dataset(std::uint64_t seed, std::size_t n, const SynthConfig& cfg) {
  std::vector<AnnotatedSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate_sample(seed, i, cfg));
  return out;
}

DatasetSplits split_dataset(std::vector<AnnotatedSample> samples) {
  const std::size_t n = samples.size();
  const std::size_t n_train = n * 5 / 10;
  const std::size_t n_val = n * 2 / 10;
  DatasetSplits s;
  for (std::size_t i = 0; i < n; ++i) {
    auto& dst = i < n_train ? s.train : (i < n_train + n_val ? s.val : s.test);
    dst.push_back(std::move(samples[i]));
  }
  return s;
}

SceneEncoder::SceneEncoder(SceneEncoderConfig cfg) : cfg_(cfg) {
  if (cfg_.grid == 0 || cfg_.output_dim == 0) throw ConfigError("scene encoder dimensions must be positive");
  projection_ = Tensor({raw_dim(), cfg_.output_dim});
  RngStream rng(cfg_.seed, 0xE7C0DE);
  const double bound = std::sqrt(3.0 / 8.0);
  for (double& v : projection_.data()) v = rng.uniform(-bound, bound);
}

Tensor SceneEncoder::occupancy(const Scene& scene) const {
  const std::size_t g = cfg_.grid;
  Tensor raw({raw_dim()});
  const int W = scene.canvas.width, H = scene.canvas.height;
  for (const Region& r : scene.regions) {
    const bool active = r.label == scene.interaction.hand_label || r.label == scene.interaction.object_label;
    const double intensity = active ? 1.0 : 0.5;
    const std::size_t base = label_index(r.label) * g * g;
    for (std::size_t gy = 0; gy < g; ++gy) {
      const int y0 = static_cast<int>(gy * static_cast<std::size_t>(H) / g);
      const int y1 = static_cast<int>((gy + 1) * static_cast<std::size_t>(H) / g);
      const int oy = std::max(0, std::min(y1, r.box.ey) - std::max(y0, r.box.sy));
      if (oy == 0) continue;
      for (std::size_t gx = 0; gx < g; ++gx) {
        const int x0 = static_cast<int>(gx * static_cast<std::size_t>(W) / g);
        const int x1 = static_cast<int>((gx + 1) * static_cast<std::size_t>(W) / g);
        const int ox = std::max(0, std::min(x1, r.box.ex) - std::max(x0, r.box.sx));
        if (ox == 0) continue;
        const double cell = static_cast<double>((x1 - x0) * (y1 - y0));
        raw[base + gy * g + gx] = intensity * static_cast<double>(ox * oy) / cell;
      }
    }
  }
  const auto verb = std::find(kVerbs.begin(), kVerbs.end(), scene.interaction.verb);
  if (verb != kVerbs.end())
    raw[kAllLabels.size() * g * g + static_cast<std::size_t>(verb - kVerbs.begin())] = 1.0;
  return raw;
}

Tensor SceneEncoder::features(const Scene& scene) const {
  const Tensor raw = occupancy(scene);
  Tensor out({cfg_.output_dim});
  vecmat_accum(raw.data(), projection_, out.data());
  return out;
}

Tensor scene_features(const Scene& scene, const SceneEncoder& encoder) { return encoder.features(scene); }

}  // namespace agrl
