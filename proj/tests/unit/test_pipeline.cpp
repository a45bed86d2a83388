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

#include <gtest/gtest.h>

#include "agrl/error.hpp"
#include "agrl/parser.hpp"
#include "agrl/pipeline.hpp"
#include "agrl/plot.hpp"

namespace agrl {
namespace {

RunConfig small_config() {
  RunConfig cfg;
  cfg.n_scenes = 40;
  cfg.stage1.epochs = 2;
  cfg.stage2.steps = 6;
  cfg.stage2.groups_per_step = 2;
  cfg.stage2.warmup_steps = 4;
  cfg.stage2.warmup_batch = 4;
  cfg.stage2.final_window = 3;
  return cfg;
}

struct Trained {
  RunConfig cfg;
  std::vector<AnnotatedSample> train, test;
  Stage1Model stage1;
};

const Trained& trained() {
  static const Trained t = [] {
    Trained r;
    r.cfg = small_config();
    r.train = load_split(r.cfg, "train");
    r.test = load_split(r.cfg, "test");
    r.stage1 = train_stage1(r.cfg, r.train).model;
    return r;
  }();
  return t;
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig cfg = small_config();
  cfg.seed = 7;
  cfg.stage2.fusion = FusionKind::Mlp;
  cfg.stage2.grpo.kl_estimator = KlEstimator::K3;
  cfg.stage2.weights.lambda_g = 0.0;
  const nlohmann::json j = to_json(cfg);
  EXPECT_EQ(to_json(run_config_from_json(j)), j);
}

TEST(RunConfig, MissingKeysKeepDefaultsAndUnknownKeysAreRejected) {
  const RunConfig cfg = run_config_from_json(nlohmann::json::parse(R"({"seed": 5, "stage2": {"lr": 0.01}})"));
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.stage2.lr, 0.01);
  EXPECT_EQ(cfg.stage2.steps, RunConfig{}.stage2.steps);
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"stage2": {"hidden": 3}})")), ConfigError);
  EXPECT_THROW(run_config_from_json(nlohmann::json::parse(R"({"seeds": 1})")), ConfigError);
}

TEST(RunConfig, ValidationRejectsBadValues) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.stage2.group_size = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.stage2.lr = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.stage2.weights.lambda_a = -0.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = RunConfig{};
  cfg.eval_split = "dev";
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Telemetry, JsonlRoundTrip) {
  std::vector<StepTelemetry> t(3);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i].step = i + 1;
    t[i].mean_reward = 0.1 * static_cast<double>(i) + 1.0 / 3.0;
    t[i].mean_kl = 1e-17 * static_cast<double>(i);
  }
  const std::string text = telemetry_jsonl(t);
  const auto back = telemetry_from_jsonl(text);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[2].mean_reward, t[2].mean_reward);
  EXPECT_EQ(back[1].mean_kl, t[1].mean_kl);
  EXPECT_EQ(telemetry_jsonl(back), text);
}

TEST(Stage1, LossDecreasesAndDescribeIsDeterministic) {
  const Trained& t = trained();
  const Stage1Result again = train_stage1(t.cfg, t.train);
  ASSERT_EQ(again.epoch_losses.size(), 2u);
  EXPECT_LT(again.epoch_losses[1], again.epoch_losses[0]);
  const FrozenEncoders enc(t.cfg.encoders, t.cfg.stage2.dim_o);
  const Vocab vocab = Vocab::standard();
  const auto a = t.stage1.describe(t.test[0].scene, enc, vocab), b = t.stage1.describe(t.test[0].scene, enc, vocab);
  EXPECT_EQ(a.text, b.text);
  EXPECT_EQ(a.f_ana.size(), t.cfg.stage1.hidden_dim);
  EXPECT_TRUE(std::equal(a.f_ana.data().begin(), a.f_ana.data().end(), b.f_ana.data().begin()));
}

TEST(Stage2, TrainingIsDeterministic) {
  const Trained& t = trained();
  const Stage2Result a = train_stage2(t.cfg, t.stage1, t.train);
  const Stage2Result b = train_stage2(t.cfg, t.stage1, t.train);
  ASSERT_FALSE(a.aborted) << a.abort_reason;
  ASSERT_EQ(a.telemetry.size(), t.cfg.stage2.steps);
  ASSERT_EQ(a.warmup_losses.size(), t.cfg.stage2.warmup_steps);
  EXPECT_EQ(telemetry_jsonl(a.telemetry), telemetry_jsonl(b.telemetry));
  EXPECT_EQ(flatten(a.model.policy), flatten(b.model.policy));
  for (const StepTelemetry& s : a.telemetry) {
    EXPECT_GE(s.mean_reward, 0.0);
    EXPECT_LE(s.mean_reward, 4.0);
    EXPECT_GE(s.clip_fraction, 0.0);
    EXPECT_LE(s.clip_fraction, 1.0);
    EXPECT_GE(s.mean_kl, 0.0);
  }
}

TEST(Stage2, ThreadCountDoesNotChangeTelemetry) {
  const Trained& t = trained();
  RunConfig four = t.cfg;
  four.threads = 4;
  EXPECT_EQ(telemetry_jsonl(train_stage2(t.cfg, t.stage1, t.train).telemetry),
            telemetry_jsonl(train_stage2(four, t.stage1, t.train).telemetry));
}

TEST(Stage2, SeedChangesTelemetry) {
  const Trained& t = trained();
  RunConfig other = t.cfg;
  other.seed = 43;
  EXPECT_NE(telemetry_jsonl(train_stage2(t.cfg, t.stage1, t.train).telemetry),
            telemetry_jsonl(train_stage2(other, t.stage1, t.train).telemetry));
}

TEST(Stage2, RolloutLogAndCallback) {
  const Trained& t = trained();
  Stage2Options opt;
  opt.log_rollouts = true;
  std::size_t calls = 0;
  opt.on_step = [&](const StepTelemetry& s) { EXPECT_EQ(s.step, ++calls); };
  const Stage2Result r = train_stage2(t.cfg, t.stage1, t.train, opt);
  EXPECT_EQ(calls, t.cfg.stage2.steps);
  ASSERT_EQ(r.rollouts.size(), t.cfg.stage2.steps * t.cfg.stage2.groups_per_step * t.cfg.stage2.group_size);
  double sum = 0.0;
  for (std::size_t i = 0; i < 8; ++i) sum += r.rollouts[i].reward.total;
  EXPECT_NEAR(sum / 8.0, r.telemetry[0].mean_reward, 1e-12);
}

TEST(Stage2, FinalMeanRewardWindow) {
  Stage2Result r;
  for (int i = 1; i <= 5; ++i) {
    StepTelemetry s;
    s.step = static_cast<std::size_t>(i);
    s.mean_reward = i;
    r.telemetry.push_back(s);
  }
  EXPECT_EQ(r.final_mean_reward(2), 4.5);
  EXPECT_EQ(r.final_mean_reward(10), 3.0);
}

TEST(Stage2, WarmupTeachesTheResponseGrammar) {
  const Trained& t = trained();
  RunConfig cfg = t.cfg;
  cfg.stage2.warmup_steps = 200;
  Stage2Options opt;
  opt.skip_rl = true;
  const Stage2Result r = train_stage2(cfg, t.stage1, t.train, opt);
  EXPECT_LT(r.warmup_losses.back(), r.warmup_losses.front());
  const EvalReport rep = evaluate(t.stage1, r.model, t.test, cfg.stage2.weights);
  EXPECT_GT(rep.mean_r_format, 0.8);
}

TEST(Checkpoint, Stage1AndStage2RoundTrip) {
  const Trained& t = trained();
  const Vocab vocab = Vocab::standard();
  const Checkpoint c1 = deserialize_checkpoint(serialize_checkpoint(to_checkpoint(t.stage1, vocab)));
  const Stage1Model s1 = stage1_from_checkpoint(c1);
  EXPECT_EQ(flatten(s1.decoder), flatten(t.stage1.decoder));
  EXPECT_EQ(s1.max_len, t.stage1.max_len);

  for (FusionKind kind : {FusionKind::Afs, FusionKind::None, FusionKind::CrossAttention}) {
    RunConfig cfg = t.cfg;
    cfg.stage2.fusion = kind;
    const Stage2Model m = init_stage2(cfg);
    const Stage2Model back = stage2_from_checkpoint(deserialize_checkpoint(serialize_checkpoint(to_checkpoint(m, vocab))));
    EXPECT_EQ(back.fusion_kind(), kind);
    EXPECT_EQ(flatten(back.policy), flatten(m.policy));
  }
  EXPECT_THROW(stage2_from_checkpoint(c1), ValidationError);
}

TEST(Evaluate, OracleOutputsScorePerfectly) {
  const Trained& t = trained();
  std::vector<std::string> analyses, responses;
  for (const AnnotatedSample& s : t.test) {
    analyses.push_back(s.analysis_text);
    for (const QueryCase& q : s.queries) responses.push_back(render_response(q.gt_answer, q.gt_boxes(s.scene)));
  }
  const EvalReport r = score_outputs(t.test, analyses, responses, {});
  EXPECT_EQ(r.mean_reward, 4.0);
  EXPECT_EQ(r.ciou, 1.0);
  EXPECT_EQ(r.n_samples, t.test.size());
  EXPECT_EQ(r.n_queries, 3 * t.test.size());
  EXPECT_FALSE(r.ciou_by_kind.at("no_target").has_value());
  EXPECT_EQ(r.ciou_by_kind.at("single_target").value(), 1.0);
  responses.pop_back();
  EXPECT_THROW(score_outputs(t.test, analyses, responses, {}), ValidationError);
  EXPECT_THROW(score_outputs({}, {}, {}, {}), ValidationError);
}

TEST(Evaluate, DeterministicAndThreadIndependent) {
  const Trained& t = trained();
  const Stage2Model m = train_stage2(t.cfg, t.stage1, t.train).model;
  const EvalReport a = evaluate(t.stage1, m, t.test, {}, 1), b = evaluate(t.stage1, m, t.test, {}, 3);
  EXPECT_EQ(to_json(a), to_json(b));
  EXPECT_GE(a.ciou, 0.0);
  EXPECT_LE(a.ciou, 1.0);
}

TEST(Ablation, VariantsShareDataAndDifferOnlyInFusion) {
  const Trained& t = trained();
  const AblationResult none = ablation_run(t.cfg, FusionKind::None, t.stage1, t.train, t.test);
  const AblationResult again = ablation_run(t.cfg, FusionKind::None, t.stage1, t.train, t.test);
  EXPECT_EQ(none.variant, FusionKind::None);
  EXPECT_EQ(telemetry_jsonl(none.telemetry), telemetry_jsonl(again.telemetry));
  EXPECT_EQ(none.final_mean_reward, again.final_mean_reward);
}

TEST(Plot, SvgIsPureAndWellFormed) {
  std::vector<StepTelemetry> t(30);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i].step = i + 1;
    t[i].mean_reward = 1.0 + std::sin(static_cast<double>(i));
  }
  const std::string a = reward_curve_svg(t), b = reward_curve_svg(t);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("<svg", 0), 0u);
  EXPECT_NE(a.find("</svg>"), std::string::npos);
  EXPECT_NE(a.find("polyline"), std::string::npos);
  EXPECT_THROW(reward_curve_svg({}), ValidationError);
  PlotOptions tiny;
  tiny.width = 10;
  EXPECT_THROW(reward_curve_svg(t, tiny), ConfigError);
}

}  // namespace
}  // namespace agrl
