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
#include <set>

#include <gtest/gtest.h>

#include "agrl/diagnostics.hpp"
#include "agrl/encoders.hpp"
#include "agrl/error.hpp"
#include "agrl/gradcheck.hpp"
#include "agrl/parser.hpp"
#include "agrl/seq_model.hpp"
#include "agrl/synth_env.hpp"
#include "agrl/vocab.hpp"

namespace agrl {
namespace {

Tensor random_tensor(std::vector<std::size_t> shape, RngStream& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

const Vocab& vocab() {
  static const Vocab v = Vocab::standard();
  return v;
}

SeqModelConfig small_config(std::size_t ctx = 6) {
  return {vocab().size(), 4, 5, ctx, vocab().bos(), vocab().eos()};
}

TEST(Vocab, StandardIsUniqueAndSmall) {
  const Vocab& v = vocab();
  EXPECT_LE(v.size(), 64u);
  EXPECT_EQ(std::set<std::string>(v.tokens().begin(), v.tokens().end()).size(), v.size());
  EXPECT_TRUE(v.contains("<answer>"));
  EXPECT_TRUE(v.contains("left_hand"));
  for (char d = '0'; d <= '9'; ++d) EXPECT_TRUE(v.contains(std::string(1, d)));
  EXPECT_THROW(v.id("spoon"), ValidationError);
  EXPECT_THROW(Vocab({"a", "a", std::string(kEos)}), ValidationError);
  EXPECT_THROW(Vocab({"a", "b"}), ValidationError);
}

TEST(Vocab, ResponseRoundTripsThroughParser) {
  RngStream rng(51, 0);
  const Vocab& v = vocab();
  for (int trial = 0; trial < 300; ++trial) {
    const std::string answer = trial % 3 == 0 ? "none" : trial % 3 == 1 ? "mug" : "right_hand and kettle";
    std::vector<BBox> boxes;
    for (int k = 0; k < trial % 3; ++k) {
      const int sx = static_cast<int>(rng.uniform_int(0, 62)), sy = static_cast<int>(rng.uniform_int(0, 62));
      boxes.push_back({sx, sy, static_cast<int>(rng.uniform_int(sx + 1, 64)), static_cast<int>(rng.uniform_int(sy + 1, 64))});
    }
    const std::vector<TokenId> ids = v.encode_response(answer, boxes);
    ASSERT_EQ(ids.back(), v.eos());
    const std::string text = v.detokenize(ids);
    ASSERT_EQ(text, render_response(answer, boxes));
  }
}

TEST(Vocab, TextEncodingDetokenizes) {
  const Vocab& v = vocab();
  const std::vector<TokenId> ids = v.encode_text("The left hand is grasping the mug.");
  EXPECT_EQ(ids.back(), v.eos());
  EXPECT_EQ(v.detokenize(ids), "the left hand is grasping the mug.");
}

TEST(SeqModel, ZeroParamsGiveUniformDistribution) {
  const SeqModelConfig cfg = small_config();
  const SeqModelParams m = seq_model_zeros(cfg);
  const std::vector<double> ctx(cfg.context_dim, 0.3), h(cfg.hidden_dim, 0.0);
  StepOutput s = step_logits(m, h, cfg.bos, ctx);
  log_softmax_inplace(s.logits);
  for (double lp : s.logits) EXPECT_NEAR(lp, -std::log(static_cast<double>(cfg.vocab_size)), 1e-14);
}

TEST(SeqModel, UniformModelLossIsLogV) {
  const SeqModelConfig cfg = small_config();
  const SeqModelParams m = seq_model_zeros(cfg);
  const std::vector<double> ctx(cfg.context_dim, 0.0);
  const SftResult r = sft_loss_and_grad(m, ctx, vocab().encode_response("mug", {{1, 2, 3, 4}}), cfg.bos);
  EXPECT_NEAR(r.loss, std::log(static_cast<double>(vocab().size())), 1e-12);
}

TEST(SeqModel, HiddenStateIsBounded) {
  RngStream rng(52, 0);
  const SeqModelConfig cfg = small_config();
  SeqModelParams m = seq_model_init(cfg, rng);
  for (double& v : m.w_c.data()) v *= 50.0;
  const Tensor ctx = random_tensor({cfg.context_dim}, rng, 10.0);
  std::vector<double> h(cfg.hidden_dim, 0.0);
  for (int t = 0; t < 20; ++t) {
    h = step_logits(m, h, static_cast<TokenId>(t % static_cast<int>(cfg.vocab_size)), ctx.data()).h;
    for (double v : h) ASSERT_LE(std::abs(v), 1.0);
  }
  EXPECT_THROW(step_logits(m, h, 999, ctx.data()), ValidationError);
}

TEST(SeqModel, SamplingIsDeterministicAndSelfConsistent) {
  RngStream rng(53, 0);
  const SeqModelConfig cfg = small_config();
  const SeqModelParams m = seq_model_init(cfg, rng);
  const Tensor ctx = random_tensor({cfg.context_dim}, rng);
  for (int trial = 0; trial < 30; ++trial) {
    RngStream a(100, static_cast<std::uint64_t>(trial)), b(100, static_cast<std::uint64_t>(trial));
    const SampledSequence s1 = sample_sequence(m, ctx.data(), a, 12, cfg.bos, cfg.eos);
    const SampledSequence s2 = sample_sequence(m, ctx.data(), b, 12, cfg.bos, cfg.eos);
    ASSERT_EQ(s1.tokens, s2.tokens);
    ASSERT_LE(s1.tokens.size(), 12u);
    const SequenceTrace tr = logprob_of(m, ctx.data(), s1.tokens, cfg.bos);
    ASSERT_EQ(tr.token_logprobs, s1.token_logprobs);
    ASSERT_EQ(tr.hidden_at(tr.length() - 1, cfg.hidden_dim).size(), s1.h_final.size());
    for (std::size_t k = 0; k < cfg.hidden_dim; ++k) ASSERT_EQ(tr.hidden_at(tr.length() - 1, cfg.hidden_dim)[k], s1.h_final[k]);
    double total = 0.0;
    for (double lp : s1.token_logprobs) total += lp;
    ASSERT_EQ(tr.total_logprob, total);
  }
}

TEST(SeqModel, SaturatedLogitAlwaysWins) {
  RngStream rng(54, 0);
  const SeqModelConfig cfg = small_config();
  SeqModelParams m = seq_model_init(cfg, rng);
  const TokenId target = vocab().id("mug");
  m.b_o[static_cast<std::size_t>(target)] = 1e4;
  const Tensor ctx = random_tensor({cfg.context_dim}, rng);
  RngStream srng(55, 0);
  const SampledSequence s = sample_sequence(m, ctx.data(), srng, 9, cfg.bos, cfg.eos);
  ASSERT_EQ(s.tokens.size(), 9u);
  for (TokenId t : s.tokens) EXPECT_EQ(t, target);
  // Greedy decoding agrees, and the forced target has near-zero loss.
  EXPECT_EQ(greedy_decode(m, ctx.data(), 9, cfg.bos, cfg.eos).tokens, s.tokens);
  EXPECT_LT(sft_loss_and_grad(m, ctx.data(), s.tokens, cfg.bos).loss, 1e-12);
  EXPECT_THROW(sample_sequence(m, ctx.data(), srng, 0, cfg.bos, cfg.eos), ValidationError);
}

TEST(SeqModel, DistributionsAreNormalized) {
  RngStream rng(56, 0);
  const SeqModelConfig cfg = small_config();
  const SeqModelParams m = seq_model_init(cfg, rng);
  const Tensor ctx = random_tensor({cfg.context_dim}, rng);
  const SequenceTrace tr = logprob_of(m, ctx.data(), vocab().encode_response("bowl", {{3, 3, 9, 9}}), cfg.bos);
  for (std::size_t t = 0; t < tr.length(); ++t) {
    double s = 0.0;
    for (double lp : tr.log_probs_at(t, cfg.vocab_size)) s += std::exp(lp);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  EXPECT_EQ(logprob_of(m, ctx.data(), {}, cfg.bos).total_logprob, 0.0);
}

TEST(SeqModel, SftGradientMatchesFiniteDifferences) {
  RngStream rng(57, 0);
  const SeqModelConfig cfg = small_config();
  for (int trial = 0; trial < 3; ++trial) {
    const SeqModelParams m = seq_model_init(cfg, rng);
    const Tensor ctx = random_tensor({cfg.context_dim}, rng);
    const std::vector<TokenId> target = vocab().encode_response("left_hand", {{1, 2, 13, 24}});
    const SftResult r = sft_loss_and_grad(m, ctx.data(), target, cfg.bos);
    const std::vector<double> numeric = finite_diff_params<SeqModelParams>(
        m, [&](const SeqModelParams& q) { return sft_loss_and_grad(q, ctx.data(), target, cfg.bos).loss; });
    EXPECT_LT(relative_error(flatten(r.grads), numeric), 1e-5);
    const Tensor gctx = finite_diff_grad(
        [&](const Tensor& c) { return sft_loss_and_grad(m, c.data(), target, cfg.bos).loss; }, ctx);
    EXPECT_LT(relative_error(r.grad_ctx, gctx.values()), 1e-5);
  }
}

TEST(SeqModel, LogitsGradientMatchesFiniteDifferences) {
  RngStream rng(58, 0);
  const SeqModelConfig cfg = small_config();
  const SeqModelParams m = seq_model_init(cfg, rng);
  const Tensor ctx = random_tensor({cfg.context_dim}, rng);
  const std::vector<TokenId> tokens = {5, 9, 12};
  const Tensor w = random_tensor({tokens.size() * cfg.vocab_size}, rng);
  const Tensor wh = random_tensor({cfg.hidden_dim}, rng);
  // L = sum_t w_t . log_probs_t + wh . h_final, differentiated by hand through the softmax.
  const auto loss = [&](const SeqModelParams& q) {
    const SequenceTrace tr = logprob_of(q, ctx.data(), tokens, cfg.bos);
    double s = 0.0;
    for (std::size_t i = 0; i < tr.log_probs.size(); ++i) s += w[i] * tr.log_probs[i];
    const auto h = tr.hidden_at(tokens.size() - 1, cfg.hidden_dim);
    for (std::size_t k = 0; k < cfg.hidden_dim; ++k) s += wh[k] * h[k];
    return s;
  };
  const SequenceTrace tr = logprob_of(m, ctx.data(), tokens, cfg.bos);
  std::vector<double> grad_logits(tr.log_probs.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    double wsum = 0.0;
    for (std::size_t v = 0; v < cfg.vocab_size; ++v) wsum += w[t * cfg.vocab_size + v];
    for (std::size_t v = 0; v < cfg.vocab_size; ++v) {
      const std::size_t i = t * cfg.vocab_size + v;
      grad_logits[i] = w[i] - std::exp(tr.log_probs[i]) * wsum;
    }
  }
  SeqModelParams grads = zeros_like(m);
  std::vector<double> grad_ctx(cfg.context_dim, 0.0);
  seq_backward(m, ctx.data(), tr, grad_logits, wh.data(), cfg.bos, grads, grad_ctx);
  EXPECT_LT(relative_error(flatten(grads), finite_diff_params<SeqModelParams>(m, loss)), 1e-5);
}

TEST(SeqModel, ConfigValidation) {
  SeqModelConfig cfg = small_config();
  cfg.hidden_dim = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.eos = 100;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Encoders, TextEncoderUnitRmsAndEmptyIsZero) {
  const TextEncoder enc;
  const Tensor e = enc.encode("Segment the mug.");
  double ss = 0.0;
  for (double v : e.data()) ss += v * v;
  EXPECT_NEAR(std::sqrt(ss / static_cast<double>(e.size())), 1.0, 1e-12);
  const Tensor empty = enc.encode("");
  for (double v : empty.data()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(enc.encode("Segment the MUG"), enc.encode("segment the mug."));
}

TEST(Encoders, ContextIsProjectionUnderFreshAfs) {
  RngStream rng(59, 0);
  const AfsConfig cfg{128, 64, 96};
  const EmbeddingProjector proj(128, 32, 96);
  const FusionParams fusion = fusion_init(FusionKind::Afs, cfg, rng);
  const Tensor scene = random_tensor({128}, rng), query = random_tensor({32}, rng);
  const Tensor f_ana = random_tensor({128}, rng);
  const Tensor f_emb = proj.project(scene, query);
  EXPECT_EQ(encode_context(scene, query, f_ana, fusion, proj), f_emb);
  EXPECT_EQ(encode_context(scene, query, f_ana, fusion, proj), encode_context(scene, query, f_ana, fusion, proj));
}

TEST(Encoders, DescriptorMattersOnceOutputProjectionIsTrained) {
  RngStream rng(60, 0);
  const AfsConfig cfg{128, 64, 96};
  const EmbeddingProjector proj(128, 32, 96);
  FusionParams fusion = fusion_init(FusionKind::Afs, cfg, rng);
  const Tensor scene = random_tensor({128}, rng), query = random_tensor({32}, rng);
  const Tensor a = random_tensor({128}, rng), b = random_tensor({128}, rng);
  EXPECT_EQ(encode_context(scene, query, a, fusion, proj), encode_context(scene, query, b, fusion, proj));
  auto& afs = std::get<AfsParams>(fusion.block);
  for (double& v : afs.w_up.data()) v = rng.uniform(-0.1, 0.1);
  EXPECT_NE(encode_context(scene, query, a, fusion, proj), encode_context(scene, query, b, fusion, proj));
}

}  // namespace
}  // namespace agrl
