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

#include <string>
#include <string_view>
#include <variant>

#include "agrl/afs.hpp"

namespace agrl {

// Ways of injecting the analysis descriptor into the multimodal embedding.
// All variants map (f_ana [b x dim_i], f_emb [b x dim_o]) -> [b x dim_o].
enum class FusionKind { None, Concat, Sum, Mlp, CrossAttention, Afs };

std::string_view to_string(FusionKind k) noexcept;
// Throws ConfigError for an unknown name.
FusionKind fusion_kind_from_string(std::string_view name);

// out = f_emb (descriptor path dropped)
struct NoFusionParams {
  template <class F>
  void for_each(F&&) {}
  template <class F>
  void for_each(F&&) const {}
};

// out = [f_emb, f_ana] W + b
struct ConcatFusionParams {
  Tensor w, b;
  template <class F>
  void for_each(F&& f) {
    f("w", w);
    f("b", b);
  }
  template <class F>
  void for_each(F&& f) const {
    f("w", w);
    f("b", b);
  }
};

// out = f_emb + f_ana W + b
struct SumFusionParams {
  Tensor w, b;
  template <class F>
  void for_each(F&& f) {
    f("w", w);
    f("b", b);
  }
  template <class F>
  void for_each(F&& f) const {
    f("w", w);
    f("b", b);
  }
};

// out = f_emb + tanh(f_ana W1 + b1) W2 + b2
struct MlpFusionParams {
  Tensor w1, b1, w2, b2;
  template <class F>
  void for_each(F&& f) {
    f("w1", w1);
    f("b1", b1);
    f("w2", w2);
    f("b2", b2);
  }
  template <class F>
  void for_each(F&& f) const {
    f("w1", w1);
    f("b1", b1);
    f("w2", w2);
    f("b2", b2);
  }
};

// Queries from the embedding, keys/values from the descriptor, attention
// over sqrt(dim) row tokens, residual up-projection.
struct CrossAttentionParams {
  Tensor w_q, w_k, w_v, w_up, b_up;
  template <class F>
  void for_each(F&& f) {
    f("w_q", w_q);
    f("w_k", w_k);
    f("w_v", w_v);
    f("w_up", w_up);
    f("b_up", b_up);
  }
  template <class F>
  void for_each(F&& f) const {
    f("w_q", w_q);
    f("w_k", w_k);
    f("w_v", w_v);
    f("w_up", w_up);
    f("b_up", b_up);
  }
};

struct FusionParams {
  std::variant<NoFusionParams, ConcatFusionParams, SumFusionParams, MlpFusionParams,
               CrossAttentionParams, AfsParams>
      block;

  FusionKind kind() const noexcept;

  template <class F>
  void for_each(F&& f) {
    std::visit([&](auto& b) { b.for_each(f); }, block);
  }
  template <class F>
  void for_each(F&& f) const {
    std::visit([&](const auto& b) { b.for_each(f); }, block);
  }
};

// Output projections of the residual variants start at zero so that
// fusion begins as the identity on f_emb; concat starts from a random linear
// layer as usual.
FusionParams fusion_init(FusionKind kind, const AfsConfig& cfg, RngStream& rng);

struct FusionCache {
  std::uint64_t params_fingerprint = 0;
  Tensor f_ana, f_emb;
  Tensor hidden;                    // mlp pre-activation output (tanh)
  std::vector<Tensor> q, k, v, a;   // cross-attention, per sample
  Tensor fused;                     // cross-attention A V, [b x dim]
  AfsCache afs;
};

struct FusionForward {
  Tensor out;
  FusionCache cache;
};

FusionForward fusion_forward(const FusionParams& p, const Tensor& f_ana, const Tensor& f_emb);

struct FusionGrads {
  Tensor grad_f_ana;
  Tensor grad_f_emb;
  FusionParams grad_params;
};

FusionGrads fusion_backward(const FusionParams& p, const FusionCache& cache, const Tensor& grad_out);

}  // namespace agrl
