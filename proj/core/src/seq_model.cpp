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

#include "agrl/seq_model.hpp"

#include <algorithm>
#include <cmath>

#include "agrl/error.hpp"
#include "agrl/ops.hpp"
#include "agrl/params.hpp"

namespace agrl {

void SeqModelConfig::validate() const {
  if (vocab_size < 2 || embed_dim == 0 || hidden_dim == 0 || context_dim == 0)
    throw ConfigError("sequence model dimensions must be positive (vocab >= 2)");
  auto in_vocab = [&](TokenId t) { return t >= 0 && static_cast<std::size_t>(t) < vocab_size; };
  if (!in_vocab(bos) || !in_vocab(eos)) throw ConfigError("BOS/EOS ids outside the vocabulary");
}

namespace {

Tensor uniform(std::vector<std::size_t> shape, double bound, RngStream& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

double inv_sqrt(std::size_t n) { return 1.0 / std::sqrt(static_cast<double>(n)); }

// ctx W_c + b_h, constant across steps.
std::vector<double> context_drive(const SeqModelParams& m, std::span<const double> ctx) {
  if (ctx.size() != m.context_dim())
    throw DimensionError("context length " + std::to_string(ctx.size()) + " != " +
                         std::to_string(m.context_dim()));
  std::vector<double> drive(m.b_h.data().begin(), m.b_h.data().end());
  vecmat_accum(ctx, m.w_c, drive);
  return drive;
}

void check_token(const SeqModelParams& m, TokenId t) {
  if (t < 0 || static_cast<std::size_t>(t) >= m.vocab_size())
    throw ValidationError("token id " + std::to_string(t) + " is outside the vocabulary");
}

// Shared by sampling and teacher forcing so both produce bit-identical
// numbers for the same prefix.
void advance(const SeqModelParams& m, std::span<const double> drive, std::span<const double> h_prev,
             TokenId tok_prev, std::span<double> h_out, std::span<double> logits_out) {
  check_token(m, tok_prev);
  std::copy(drive.begin(), drive.end(), h_out.begin());
  vecmat_accum(m.embed.row(static_cast<std::size_t>(tok_prev)), m.w_x, h_out);
  vecmat_accum(h_prev, m.w_h, h_out);
  for (double& v : h_out) v = std::tanh(v);
  std::copy(m.b_o.data().begin(), m.b_o.data().end(), logits_out.begin());
  vecmat_accum(h_out, m.w_o, logits_out);
}

}  // namespace

SeqModelParams seq_model_init(const SeqModelConfig& cfg, RngStream& rng) {
  cfg.validate();
  SeqModelParams p;
  p.embed = uniform({cfg.vocab_size, cfg.embed_dim}, 1.0, rng);
  p.w_x = uniform({cfg.embed_dim, cfg.hidden_dim}, inv_sqrt(cfg.embed_dim), rng);
  p.w_h = uniform({cfg.hidden_dim, cfg.hidden_dim}, inv_sqrt(cfg.hidden_dim), rng);
  p.w_c = uniform({cfg.context_dim, cfg.hidden_dim}, inv_sqrt(cfg.context_dim), rng);
  p.b_h = Tensor({cfg.hidden_dim});
  p.w_o = uniform({cfg.hidden_dim, cfg.vocab_size}, inv_sqrt(cfg.hidden_dim), rng);
  p.b_o = Tensor({cfg.vocab_size});
  return p;
}

SeqModelParams seq_model_zeros(const SeqModelConfig& cfg) {
  cfg.validate();
  return SeqModelParams{Tensor({cfg.vocab_size, cfg.embed_dim}), Tensor({cfg.embed_dim, cfg.hidden_dim}),
                        Tensor({cfg.hidden_dim, cfg.hidden_dim}), Tensor({cfg.context_dim, cfg.hidden_dim}),
                        Tensor({cfg.hidden_dim}), Tensor({cfg.hidden_dim, cfg.vocab_size}),
                        Tensor({cfg.vocab_size})};
}

StepOutput step_logits(const SeqModelParams& m, std::span<const double> h_prev, TokenId tok_prev,
                       std::span<const double> ctx) {
  if (h_prev.size() != m.hidden_dim()) throw DimensionError("step_logits: hidden size mismatch");
  const auto drive = context_drive(m, ctx);
  StepOutput out{std::vector<double>(m.vocab_size()), std::vector<double>(m.hidden_dim())};
  advance(m, drive, h_prev, tok_prev, out.h, out.logits);
  return out;
}

SequenceTrace logprob_of(const SeqModelParams& m, std::span<const double> ctx,
                         const std::vector<TokenId>& tokens, TokenId bos) {
  const std::size_t hid = m.hidden_dim(), V = m.vocab_size(), T = tokens.size();
  const auto drive = context_drive(m, ctx);
  SequenceTrace tr;
  tr.tokens = tokens;
  tr.hidden.assign(T * hid, 0.0);
  tr.log_probs.assign(T * V, 0.0);
  tr.token_logprobs.assign(T, 0.0);
  const std::vector<double> h0(hid, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    check_token(m, tokens[t]);
    std::span<double> h(tr.hidden.data() + t * hid, hid);
    std::span<double> lp(tr.log_probs.data() + t * V, V);
    const std::span<const double> h_prev =
        t == 0 ? std::span<const double>(h0) : std::span<const double>(tr.hidden.data() + (t - 1) * hid, hid);
    advance(m, drive, h_prev, t == 0 ? bos : tokens[t - 1], h, lp);
    log_softmax_inplace(lp);
    tr.token_logprobs[t] = lp[static_cast<std::size_t>(tokens[t])];
    tr.total_logprob += tr.token_logprobs[t];
  }
  return tr;
}

namespace {

template <class Pick>
SampledSequence decode(const SeqModelParams& m, std::span<const double> ctx, std::size_t max_len, TokenId bos,
                       TokenId eos, Pick pick) {
  if (max_len == 0) throw ValidationError("max_len must be at least 1");
  const std::size_t hid = m.hidden_dim(), V = m.vocab_size();
  const auto drive = context_drive(m, ctx);
  SampledSequence out;
  std::vector<double> h_prev(hid, 0.0), h(hid), lp(V);
  TokenId prev = bos;
  for (std::size_t t = 0; t < max_len; ++t) {
    advance(m, drive, h_prev, prev, h, lp);
    log_softmax_inplace(lp);
    const TokenId tok = pick(std::span<const double>(lp));
    out.tokens.push_back(tok);
    out.token_logprobs.push_back(lp[static_cast<std::size_t>(tok)]);
    std::swap(h_prev, h);
    prev = tok;
    if (tok == eos) break;
  }
  out.h_final = h_prev;
  return out;
}

}  // namespace

SampledSequence sample_sequence(const SeqModelParams& m, std::span<const double> ctx, RngStream& rng,
                                std::size_t max_len, TokenId bos, TokenId eos) {
  std::vector<double> probs(m.vocab_size());
  return decode(m, ctx, max_len, bos, eos, [&](std::span<const double> lp) {
    for (std::size_t i = 0; i < lp.size(); ++i) probs[i] = std::exp(lp[i]);
    return static_cast<TokenId>(rng.categorical(probs));
  });
}

SampledSequence greedy_decode(const SeqModelParams& m, std::span<const double> ctx, std::size_t max_len,
                              TokenId bos, TokenId eos) {
  return decode(m, ctx, max_len, bos, eos, [](std::span<const double> lp) {
    return static_cast<TokenId>(std::max_element(lp.begin(), lp.end()) - lp.begin());
  });
}

void seq_backward(const SeqModelParams& m, std::span<const double> ctx, const SequenceTrace& tr,
                  std::span<const double> grad_logits, std::span<const double> grad_h_final, TokenId bos,
                  SeqModelParams& g, std::span<double> grad_ctx) {
  const std::size_t hid = m.hidden_dim(), V = m.vocab_size(), T = tr.length();
  if (grad_logits.size() != T * V) throw DimensionError("seq_backward: grad_logits must be [T x V]");
  if (!grad_h_final.empty() && grad_h_final.size() != hid)
    throw DimensionError("seq_backward: grad_h_final size mismatch");
  if (grad_ctx.size() != m.context_dim()) throw DimensionError("seq_backward: grad_ctx size mismatch");
  if (T == 0) return;

  std::vector<double> dh(hid, 0.0), da(hid), dh_prev(hid);
  std::vector<double> da_sum(hid, 0.0);
  if (!grad_h_final.empty()) std::copy(grad_h_final.begin(), grad_h_final.end(), dh.begin());
  const std::vector<double> h0(hid, 0.0);

  for (std::size_t t = T; t-- > 0;) {
    const auto h = tr.hidden_at(t, hid);
    const auto gl = grad_logits.subspan(t * V, V);
    outer_accum(h, gl, g.w_o);
    axpy(1.0, gl, g.b_o.data());
    matvec_accum(m.w_o, gl, dh);
    for (std::size_t j = 0; j < hid; ++j) da[j] = dh[j] * (1.0 - h[j] * h[j]);

    const TokenId prev = t == 0 ? bos : tr.tokens[t - 1];
    const auto x = m.embed.row(static_cast<std::size_t>(prev));
    outer_accum(x, da, g.w_x);
    matvec_accum(m.w_x, da, g.embed.row(static_cast<std::size_t>(prev)));
    const auto h_prev = t == 0 ? std::span<const double>(h0) : tr.hidden_at(t - 1, hid);
    outer_accum(h_prev, da, g.w_h);
    axpy(1.0, da, da_sum);

    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    matvec_accum(m.w_h, da, dh_prev);
    std::swap(dh, dh_prev);
  }
  // The context drive is shared by every step.
  outer_accum(ctx, da_sum, g.w_c);
  axpy(1.0, da_sum, g.b_h.data());
  matvec_accum(m.w_c, da_sum, grad_ctx);
}

SftResult sft_loss_and_grad(const SeqModelParams& m, std::span<const double> ctx,
                            const std::vector<TokenId>& targets, TokenId bos) {
  if (targets.empty()) throw ValidationError("sft_loss_and_grad: empty target sequence");
  const std::size_t V = m.vocab_size(), T = targets.size();
  const SequenceTrace tr = logprob_of(m, ctx, targets, bos);
  SftResult r{-tr.total_logprob / static_cast<double>(T), zeros_like(m),
              std::vector<double>(m.context_dim(), 0.0), {}};
  std::vector<double> gl(T * V);
  const double inv_t = 1.0 / static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t v = 0; v < V; ++v) gl[t * V + v] = std::exp(tr.log_probs[t * V + v]) * inv_t;
    gl[t * V + static_cast<std::size_t>(targets[t])] -= inv_t;
  }
  seq_backward(m, ctx, tr, gl, {}, bos, r.grads, r.grad_ctx);
  const auto hf = tr.hidden_at(T - 1, m.hidden_dim());
  r.h_final.assign(hf.begin(), hf.end());
  return r;
}

}  // namespace agrl
