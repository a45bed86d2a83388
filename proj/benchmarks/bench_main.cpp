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

#include <benchmark/benchmark.h>

#include "agrl/afs.hpp"
#include "agrl/diagnostics.hpp"
#include "agrl/geometry.hpp"
#include "agrl/grpo.hpp"
#include "agrl/parser.hpp"
#include "agrl/rewards.hpp"
#include "agrl/synth_env.hpp"
#include "agrl/text_metrics.hpp"

namespace agrl {
namespace {

Tensor random_tensor(std::vector<std::size_t> shape, RngStream& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

AfsParams random_afs(const AfsConfig& cfg, RngStream& rng) {
  FusionParams f = fusion_init(FusionKind::Afs, cfg, rng);
  randomize(f, rng);
  return std::get<AfsParams>(f.block);
}

void BM_AfsForward(benchmark::State& state) {
  RngStream rng(1, 0);
  const AfsConfig cfg;
  const AfsParams p = random_afs(cfg, rng);
  const std::size_t b = static_cast<std::size_t>(state.range(0));
  const Tensor f_ana = random_tensor({b, cfg.dim_i}, rng), f_emb = random_tensor({b, cfg.dim_o}, rng);
  for (auto _ : state) benchmark::DoNotOptimize(afs_forward(f_ana, f_emb, p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(b));
}
BENCHMARK(BM_AfsForward)->Arg(1)->Arg(8)->Arg(32);

void BM_AfsBackward(benchmark::State& state) {
  RngStream rng(2, 0);
  const AfsConfig cfg;
  const AfsParams p = random_afs(cfg, rng);
  const Tensor f_ana = random_tensor({8, cfg.dim_i}, rng), f_emb = random_tensor({8, cfg.dim_o}, rng);
  const Tensor up = random_tensor({8, cfg.dim_o}, rng);
  const AfsForward fw = afs_forward(f_ana, f_emb, p);
  for (auto _ : state) benchmark::DoNotOptimize(afs_backward(p, fw.cache, up));
}
BENCHMARK(BM_AfsBackward);

void BM_SgrpoLoss(benchmark::State& state) {
  const ToyGrpoProblem p = make_toy_grpo(3, FusionKind::Afs, static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(sgrpo_loss(p.batch, p.current, p.reference, p.config));
}
BENCHMARK(BM_SgrpoLoss)->Arg(2)->Arg(8);

void BM_ParseAndReward(benchmark::State& state) {
  const AnnotatedSample s = generate_sample(42, 0);
  const QueryCase& q = s.queries[1];
  const std::string raw = render_response(q.gt_answer, q.gt_boxes(s.scene));
  for (auto _ : state)
    benchmark::DoNotOptimize(total_reward(parse_response(raw, s.scene.canvas), q.gt_answer, q.gt_mask, {}));
}
BENCHMARK(BM_ParseAndReward);

void BM_MaskIou(benchmark::State& state) {
  const Canvas c{64, 64};
  const Mask a = rasterize_boxes({{3, 4, 40, 30}}, c), b = rasterize_boxes({{10, 12, 50, 60}, {0, 0, 8, 8}}, c);
  for (auto _ : state) benchmark::DoNotOptimize(mask_iou(a, b));
}
BENCHMARK(BM_MaskIou);

void BM_Levenshtein(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(levenshtein_ratio("left_hand and kettle", "right_hand and knife"));
}
BENCHMARK(BM_Levenshtein);

void BM_Cider(benchmark::State& state) {
  std::vector<Caption> refs, cands;
  for (const AnnotatedSample& s : generate_dataset(7, 180)) {
    refs.push_back(Caption::from_text(s.analysis_text));
    cands.push_back(Caption::from_text(analysis_text({"left_hand", "hold", "mug"})));
  }
  for (auto _ : state) benchmark::DoNotOptimize(cider(cands, refs, refs));
}
BENCHMARK(BM_Cider);

void BM_GenerateSample(benchmark::State& state) {
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_sample(42, i++));
}
BENCHMARK(BM_GenerateSample);

}  // namespace
}  // namespace agrl

BENCHMARK_MAIN();
