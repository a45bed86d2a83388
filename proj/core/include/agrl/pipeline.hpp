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

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agrl/checkpoint.hpp"
#include "agrl/encoders.hpp"
#include "agrl/fusion.hpp"
#include "agrl/grpo.hpp"
#include "agrl/rewards.hpp"
#include "agrl/seq_model.hpp"
#include "agrl/synth_env.hpp"
#include "agrl/vocab.hpp"

namespace agrl {

struct EncoderConfig {
  std::size_t vision_dim = 128;
  std::size_t text_dim = 32;
  std::size_t grid = 8;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct Stage1Config {
  std::size_t epochs = 20;
  double lr = 3e-3;
  std::size_t batch_size = 8;
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 128;  // also the descriptor width dim_i
  std::size_t max_len = 16;
};

struct Stage2Config {
  std::size_t steps = 500;
  std::size_t groups_per_step = 8;
  std::size_t group_size = 4;
  double lr = 1e-3;
  double weight_decay = 0.05;
  std::size_t updates_per_step = 2;
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 64;
  std::size_t max_len = 48;
  // Grammar warm-up before RL: SFT on well-formed responses whose answers
  // and boxes are drawn at random, independent of the scene and query.
  std::size_t warmup_steps = 200;
  std::size_t warmup_batch = 16;
  double warmup_lr = 3e-3;
  FusionKind fusion = FusionKind::Afs;
  std::size_t afs_dim = 64;
  std::size_t dim_o = 96;
  // A heavier KL anchor than the GRPO default keeps the warmed-up box
  // syntax from collapsing to empty boxes during RL.
  GrpoConfig grpo{.beta = 0.2};
  RewardWeights weights;
  std::size_t final_window = 100;
};

struct RunConfig {
  std::uint64_t seed = 42;
  std::string dataset_dir;  // empty: generate in memory from `seed`
  std::size_t n_scenes = 600;
  EncoderConfig encoders;
  Stage1Config stage1;
  Stage2Config stage2;
  std::string eval_split = "test";
  std::size_t threads = 1;

  // Throws ConfigError on out-of-range values.
  void validate() const;
  AfsConfig afs_config() const;
};

nlohmann::json to_json(const RunConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);

// Frozen visual/text encoders and the embedding projection. Their seeds are
// fixed constants, so every run sees the same features.
class FrozenEncoders {
 public:
  FrozenEncoders(const EncoderConfig& cfg, std::size_t dim_o);

  const EncoderConfig& config() const noexcept { return cfg_; }
  Tensor scene(const Scene& s) const { return scene_.features(s); }
  Tensor text(std::string_view t) const { return text_.encode(t); }
  // F_emb for one query, [dim_o].
  Tensor embed(const Scene& s, std::string_view query_text) const;
  // Stage-1 input: scene features followed by the instruction embedding.
  Tensor analysis_context(const Scene& s) const;
  std::size_t analysis_context_dim() const noexcept { return cfg_.vision_dim + cfg_.text_dim; }

 private:
  EncoderConfig cfg_;
  SceneEncoder scene_;
  TextEncoder text_;
  EmbeddingProjector projector_;
};

struct Stage1Model {
  SeqModelParams decoder;
  EncoderConfig encoders;
  std::size_t max_len = 16;

  struct Description {
    std::string text;
    Tensor f_ana;  // [dim_i]
  };
  // Greedy analysis and its final hidden state.
  Description describe(const Scene& s, const FrozenEncoders& enc, const Vocab& vocab) const;
};

struct Stage1Result {
  Stage1Model model;
  std::vector<double> epoch_losses;
};

Stage1Result train_stage1(const RunConfig& cfg, const std::vector<AnnotatedSample>& train);

struct Stage2Model {
  ResponsePolicy policy;
  EncoderConfig encoders;
  std::size_t max_len = 48;
  std::size_t dim_i = 128;
  std::size_t afs_dim = 64;
  std::size_t dim_o = 96;

  FusionKind fusion_kind() const noexcept { return policy.fusion.kind(); }
  Tensor context(const Tensor& f_ana, const Tensor& f_emb) const;
  std::string respond(const Tensor& f_ana, const Tensor& f_emb, const Vocab& vocab) const;  // greedy
};

// Randomly initialized stage-2 policy for cfg.stage2.fusion.
Stage2Model init_stage2(const RunConfig& cfg);

struct StepTelemetry {
  std::size_t step = 0;  // 1-based
  double mean_reward = 0.0;
  double mean_r_format = 0.0;
  double mean_r_answer = 0.0;
  double mean_r_ground = 0.0;
  double loss = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
};

nlohmann::json to_json(const StepTelemetry& t);
std::string telemetry_jsonl(const std::vector<StepTelemetry>& telemetry);
std::vector<StepTelemetry> telemetry_from_jsonl(const std::string& text);

struct RolloutLogEntry {
  std::size_t step = 0;
  std::string id;
  std::string scene_id;
  std::size_t query_index = 0;
  std::string raw_response;
  RewardBreakdown reward;
};

struct Stage2Options {
  bool log_rollouts = false;
  bool skip_warmup = false;
  bool skip_rl = false;
  std::function<void(const StepTelemetry&)> on_step;
};

struct Stage2Result {
  Stage2Model model;  // last good parameters
  std::vector<double> warmup_losses;
  std::vector<StepTelemetry> telemetry;
  std::vector<RolloutLogEntry> rollouts;
  bool aborted = false;
  std::string abort_reason;

  // Mean of mean_reward over the last `window` steps (all steps if fewer).
  double final_mean_reward(std::size_t window) const;
};

// Grammar warm-up followed by GRPO. Stage-1 stays frozen and only supplies
// F_ana. A non-finite loss or gradient stops training and returns the last
// good parameters with `aborted` set.
Stage2Result train_stage2(const RunConfig& cfg, const Stage1Model& stage1,
                          const std::vector<AnnotatedSample>& train, const Stage2Options& options = {});

struct TextScores {
  double meteor = 0.0;
  double cider = 0.0;
};

struct EvalReport {
  TextScores analysis;
  TextScores answering;
  double ciou = 0.0;
  std::map<std::string, std::optional<double>> ciou_by_kind;  // nullopt: empty union
  double mean_r_format = 0.0;
  double mean_r_answer = 0.0;
  double mean_r_ground = 0.0;
  double mean_reward = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_queries = 0;
};

nlohmann::json to_json(const EvalReport& r);

// Scores given analysis texts (one per sample) and raw responses (one per
// query, sample-major). Throws ValidationError on an empty split or a
// count mismatch.
EvalReport score_outputs(const std::vector<AnnotatedSample>& samples, const std::vector<std::string>& analyses,
                         const std::vector<std::string>& responses, const RewardWeights& weights);

EvalReport evaluate(const Stage1Model& stage1, const Stage2Model& stage2, const std::vector<AnnotatedSample>& split,
                    const RewardWeights& weights, std::size_t threads = 1);

struct AblationResult {
  FusionKind variant = FusionKind::Afs;
  EvalReport report;
  std::vector<StepTelemetry> telemetry;
  double final_mean_reward = 0.0;
};

// Same data, seeds and stage-1 model; only the fusion block differs.
AblationResult ablation_run(RunConfig cfg, FusionKind variant, const Stage1Model& stage1,
                            const std::vector<AnnotatedSample>& train, const std::vector<AnnotatedSample>& eval_split);

Checkpoint to_checkpoint(const Stage1Model& m, const Vocab& vocab);
Stage1Model stage1_from_checkpoint(const Checkpoint& ckpt);
Checkpoint to_checkpoint(const Stage2Model& m, const Vocab& vocab);
Stage2Model stage2_from_checkpoint(const Checkpoint& ckpt);

// Loads cfg.dataset_dir/<split>.jsonl, or generates the dataset from
// cfg.seed when no directory is configured.
std::vector<AnnotatedSample> load_split(const RunConfig& cfg, const std::string& split);

}  // namespace agrl
