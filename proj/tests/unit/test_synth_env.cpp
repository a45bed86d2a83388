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

#include <cmath>
#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "agrl/dataset_io.hpp"
#include "agrl/error.hpp"
#include "agrl/parser.hpp"
#include "agrl/rewards.hpp"
#include "agrl/synth_env.hpp"

namespace agrl {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("agrl_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(SynthEnv, TextHelpers) {
  EXPECT_EQ(gerund("grasp"), "grasping");
  EXPECT_EQ(gerund("cut"), "cutting");
  EXPECT_EQ(analysis_text({"left_hand", "grasp", "mug"}), "The left hand is grasping the mug.");
  EXPECT_EQ(serialize_prompt("scene_0007", "query", "Is there a mug?"),
            "[INST] <Img>scene_0007</Img> [query] Is there a mug? [/INST]");
  EXPECT_EQ(scene_id(7), "scene_0007");
  EXPECT_EQ(label_index("kettle"), 7u);
  EXPECT_THROW(label_index("spoon"), ValidationError);
  EXPECT_TRUE(is_hand("right_hand"));
  EXPECT_FALSE(is_hand("mug"));
}

TEST(SynthEnv, SampleIsPureInSeedAndIndex) {
  const AnnotatedSample a = generate_sample(42, 17), b = generate_sample(42, 17);
  EXPECT_EQ(a.scene, b.scene);
  EXPECT_EQ(a.analysis_text, b.analysis_text);
  ASSERT_EQ(a.queries.size(), b.queries.size());
  for (std::size_t i = 0; i < a.queries.size(); ++i) EXPECT_EQ(a.queries[i].prompt, b.queries[i].prompt);
  EXPECT_NE(generate_sample(43, 17).scene, a.scene);
  // Independent of how many samples precede it.
  EXPECT_EQ(generate_dataset(42, 18)[17].scene, a.scene);
}

TEST(SynthEnv, ScenesSatisfyInvariants) {
  for (std::uint64_t seed : {1ull, 42ull, 3407ull}) {
    for (const AnnotatedSample& s : generate_dataset(seed, 200)) {
      ASSERT_NO_THROW(s.scene.validate()) << s.id;
      for (const Region& r : s.scene.regions) {
        ASSERT_GE(r.box.width(), 4) << s.id;
        ASSERT_GE(r.box.height(), 4) << s.id;
        // Hands sit in the lower half.
        if (is_hand(r.label)) ASSERT_GE(r.box.sy + r.box.ey, s.scene.canvas.height) << s.id;
      }
      EXPECT_EQ(s.analysis_text, analysis_text(s.scene.interaction));
    }
  }
}

TEST(SynthEnv, OneQueryOfEachKind) {
  for (const AnnotatedSample& s : generate_dataset(5, 100)) {
    ASSERT_EQ(s.queries.size(), 3u);
    std::set<QueryKind> kinds;
    for (const QueryCase& q : s.queries) {
      kinds.insert(q.kind);
      ASSERT_EQ(q.gt_mask, rasterize_boxes(q.gt_boxes(s.scene), s.scene.canvas));
      ASSERT_EQ(q.prompt, serialize_prompt(s.id, "query", q.query_text));
      switch (q.kind) {
        case QueryKind::NoTarget:
          ASSERT_TRUE(q.gt_entities.empty());
          ASSERT_TRUE(q.gt_mask.empty());
          ASSERT_EQ(q.gt_answer, "none");
          break;
        case QueryKind::SingleTarget:
          ASSERT_EQ(q.gt_entities.size(), 1u);
          ASSERT_EQ(q.gt_answer, q.gt_entities[0]);
          break;
        case QueryKind::MultiTarget:
          ASSERT_EQ(q.gt_entities.size(), 2u);
          ASSERT_TRUE(is_hand(q.gt_entities[0]));
          break;
      }
    }
    ASSERT_EQ(kinds.size(), 3u);
  }
}

TEST(SynthEnv, QueryKindNames) {
  for (QueryKind k : {QueryKind::NoTarget, QueryKind::SingleTarget, QueryKind::MultiTarget})
    EXPECT_EQ(query_kind_from_string(to_string(k)), k);
  EXPECT_THROW(query_kind_from_string("few_target"), ValidationError);
}

TEST(SynthEnv, SplitIsContiguousFiveTwoThree) {
  const DatasetSplits s = split_dataset(generate_dataset(42, 600));
  ASSERT_EQ(s.train.size(), 300u);
  ASSERT_EQ(s.val.size(), 120u);
  ASSERT_EQ(s.test.size(), 180u);
  EXPECT_EQ(s.train.front().id, "scene_0000");
  EXPECT_EQ(s.val.front().id, "scene_0300");
  EXPECT_EQ(s.test.front().id, "scene_0420");
  EXPECT_EQ(s.test.back().id, "scene_0599");
}

TEST(SynthEnv, OracleResponsesScoreFour) {
  for (const AnnotatedSample& s : generate_dataset(42, 200)) {
    for (const QueryCase& q : s.queries) {
      const ParsedResponse p = parse_response(render_response(q.gt_answer, q.gt_boxes(s.scene)), s.scene.canvas);
      ASSERT_EQ(total_reward(p, q.gt_answer, q.gt_mask, {}).total, 4.0) << s.id;
    }
  }
}

TEST(SynthEnv, ValidateRejectsBrokenScenes) {
  const Scene good = generate_sample(42, 0).scene;
  Scene s = good;
  s.regions.push_back(s.regions[0]);
  EXPECT_THROW(s.validate(), ValidationError);
  s = good;
  s.regions[0].box.ex = s.canvas.width + 1;
  EXPECT_THROW(s.validate(), ValidationError);
  s = good;
  s.interaction.verb = "juggle";
  EXPECT_THROW(s.validate(), ValidationError);
  s = good;
  s.interaction.object_label = "left_hand";
  EXPECT_THROW(s.validate(), ValidationError);
}

TEST(SceneEncoder, OccupancyMatchesBoxCoverage) {
  const SceneEncoder enc;
  for (const AnnotatedSample& s : generate_dataset(9, 20)) {
    const Tensor occ = enc.occupancy(s.scene);
    const std::size_t g = enc.config().grid;
    const double cell = static_cast<double>(s.scene.canvas.width * s.scene.canvas.height) / static_cast<double>(g * g);
    for (const Region& r : s.scene.regions) {
      const bool active = r.label == s.scene.interaction.hand_label || r.label == s.scene.interaction.object_label;
      double covered = 0.0;
      for (std::size_t c = 0; c < g * g; ++c) covered += occ[label_index(r.label) * g * g + c];
      EXPECT_NEAR(covered * cell / (active ? 1.0 : 0.5), static_cast<double>(r.box.area()), 1e-9) << s.id;
    }
    double pose = 0.0;
    for (std::size_t v = 0; v < kVerbs.size(); ++v) pose += occ[kAllLabels.size() * g * g + v];
    EXPECT_EQ(pose, 1.0);
  }
}

TEST(SceneEncoder, FeaturesAreDeterministic) {
  const Scene s = generate_sample(42, 3).scene;
  const Tensor a = SceneEncoder().features(s), b = SceneEncoder().features(s);
  EXPECT_EQ(a.size(), 128u);
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}

TEST(DatasetIo, RoundTripsThroughJsonl) {
  const fs::path dir = temp_dir("dataset_io");
  const DatasetSplits splits = split_dataset(generate_dataset(11, 30));
  write_splits(dir, splits);
  const auto test = read_split(dir, "test");
  ASSERT_EQ(test.size(), splits.test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    EXPECT_EQ(test[i].id, splits.test[i].id);
    EXPECT_EQ(test[i].scene, splits.test[i].scene);
    EXPECT_EQ(test[i].analysis_text, splits.test[i].analysis_text);
    ASSERT_EQ(test[i].queries.size(), splits.test[i].queries.size());
    for (std::size_t k = 0; k < test[i].queries.size(); ++k) {
      EXPECT_EQ(test[i].queries[k].gt_mask, splits.test[i].queries[k].gt_mask);
      EXPECT_EQ(test[i].queries[k].kind, splits.test[i].queries[k].kind);
      EXPECT_EQ(test[i].queries[k].gt_answer, splits.test[i].queries[k].gt_answer);
    }
  }
  EXPECT_THROW(read_split(dir, "dev"), ConfigError);
  fs::remove_all(dir);
}

TEST(DatasetIo, RejectsTamperedMask) {
  nlohmann::json j = to_json(generate_sample(42, 1));
  EXPECT_NO_THROW(sample_from_json(j));
  j["queries"][0]["gt_entities"] = nlohmann::json::array({"right_hand"});
  if (j["queries"][0]["gt_answer"] == "right_hand") j["queries"][0]["gt_entities"] = nlohmann::json::array({"left_hand"});
  EXPECT_THROW(sample_from_json(j), ValidationError);
}

TEST(DatasetIo, ScoreRollouts) {
  const auto samples = generate_dataset(42, 4);
  const QueryCase& q = samples[2].queries[1];
  std::vector<RolloutRecord> rollouts = {
      {"r0", samples[2].id, 1, render_response(q.gt_answer, q.gt_boxes(samples[2].scene))},
      {"r1", samples[0].id, 2, "<answer>none</answer>"},
  };
  const auto scored = score_rollouts(rollouts, samples, {});
  ASSERT_EQ(scored.size(), 2u);
  EXPECT_EQ(scored[0].reward.total, 4.0);
  EXPECT_EQ(scored[1].reward.r_format, 0.5);
  rollouts.push_back({"r2", "scene_9999", 0, ""});
  EXPECT_THROW(score_rollouts(rollouts, samples, {}), ValidationError);
  rollouts.back() = {"r3", samples[0].id, 3, ""};
  EXPECT_THROW(score_rollouts(rollouts, samples, {}), ValidationError);

  const fs::path dir = temp_dir("rollouts");
  rollouts.pop_back();
  write_rollouts(dir / "r.jsonl", rollouts);
  const auto back = read_rollouts(dir / "r.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].raw_response, rollouts[0].raw_response);
  EXPECT_EQ(back[1].query_index, 2u);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace agrl
