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

#include <span>
#include <vector>

#include "agrl/rng.hpp"
#include "agrl/tensor.hpp"
#include "agrl/vocab.hpp"

namespace agrl {

struct SeqModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 64;
  std::size_t context_dim = 96;
  TokenId bos = 0;
  TokenId eos = 1;

  void validate() const;
};

// Context-conditioned recurrent decoder:
//   h_t = tanh(embed[tok_{t-1}] W_x + h_{t-1} W_h + ctx W_c + b_h)
//   logits_t = h_t W_o + b_o
// with h_0 = 0 and tok_0 = BOS.
struct SeqModelParams {
  Tensor embed;  // [V x e]
  Tensor w_x;    // [e x hid]
  Tensor w_h;    // [hid x hid]
  Tensor w_c;    // [ctx x hid]
  Tensor b_h;    // [hid]
  Tensor w_o;    // [hid x V]
  Tensor b_o;    // [V]

  std::size_t vocab_size() const { return embed.dim(0); }
  std::size_t hidden_dim() const { return w_h.dim(0); }
  std::size_t context_dim() const { return w_c.dim(0); }

  template <class F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

 private:
  template <class Self, class F>
  static void visit(Self& s, F& f) {
    f("embed", s.embed);
    f("w_x", s.w_x);
    f("w_h", s.w_h);
    f("w_c", s.w_c);
    f("b_h", s.b_h);
    f("w_o", s.w_o);
    f("b_o", s.b_o);
  }
};

SeqModelParams seq_model_init(const SeqModelConfig& cfg, RngStream& rng);
SeqModelParams seq_model_zeros(const SeqModelConfig& cfg);

struct StepOutput {
  std::vector<double> logits;
  std::vector<double> h;
};

// One recurrent step. Throws ValidationError for an unknown token id.
StepOutput step_logits(const SeqModelParams& m, std::span<const double> h_prev, TokenId tok_prev,
                       std::span<const double> ctx);

// Teacher-forced pass over `tokens` (the emitted tokens, BOS implied).
struct SequenceTrace {
  std::vector<TokenId> tokens;
  std::vector<double> hidden;     // [T x hid], h_1 .. h_T
  std::vector<double> log_probs;  // [T x V], full log-distributions
  std::vector<double> token_logprobs;
  double total_logprob = 0.0;

  std::size_t length() const noexcept { return tokens.size(); }
  std::span<const double> hidden_at(std::size_t t, std::size_t hid) const {
    return std::span<const double>(hidden).subspan(t * hid, hid);
  }
  std::span<const double> log_probs_at(std::size_t t, std::size_t v) const {
    return std::span<const double>(log_probs).subspan(t * v, v);
  }
};

SequenceTrace logprob_of(const SeqModelParams& m, std::span<const double> ctx,
                         const std::vector<TokenId>& tokens, TokenId bos);

struct SampledSequence {
  std::vector<TokenId> tokens;
  std::vector<double> token_logprobs;
  std::vector<double> h_final;
};

// Temperature-1 ancestral sampling until EOS (inclusive) or max_len tokens.
SampledSequence sample_sequence(const SeqModelParams& m, std::span<const double> ctx, RngStream& rng,
                                std::size_t max_len, TokenId bos, TokenId eos);

// Argmax decoding (lowest index wins ties).
SampledSequence greedy_decode(const SeqModelParams& m, std::span<const double> ctx, std::size_t max_len,
                              TokenId bos, TokenId eos);

// Back-propagation through time for an arbitrary loss given its gradient
// with respect to every step's logits ([T x V]) and optionally the final
// hidden state. Accumulates into grads and grad_ctx.
void seq_backward(const SeqModelParams& m, std::span<const double> ctx, const SequenceTrace& trace,
                  std::span<const double> grad_logits, std::span<const double> grad_h_final,
                  TokenId bos, SeqModelParams& grads, std::span<double> grad_ctx);

struct SftResult {
  double loss = 0.0;  // mean token cross-entropy
  SeqModelParams grads;
  std::vector<double> grad_ctx;
  std::vector<double> h_final;
};

SftResult sft_loss_and_grad(const SeqModelParams& m, std::span<const double> ctx,
                            const std::vector<TokenId>& targets, TokenId bos);

}  // namespace agrl
