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
#include <string_view>
#include <vector>

#include "agrl/ops.hpp"
#include "agrl/rng.hpp"
#include "agrl/tensor.hpp"

namespace agrl {

struct AfsConfig {
  std::size_t dim_i = 128;  // descriptor width
  std::size_t dim = 64;     // attention width; must be a perfect square
  std::size_t dim_o = 96;   // multimodal embedding width
  double ln_eps = 1e-5;

  std::size_t side() const;  // sqrt(dim)
  void validate() const;
  friend bool operator==(const AfsConfig&, const AfsConfig&) = default;
};

// Analysis-guided feature synthesizer parameters:
//   down-projection (w_down, b_down) -> layer norm (ln_gamma, ln_beta)
//   -> three 3x3 convolutions producing Q, K, V over the sqrt(dim) x sqrt(dim)
//   map -> row-token self-attention -> up-projection (w_up, b_up) added to
//   the embedding.
struct AfsParams {
  Tensor w_down, b_down;
  Tensor ln_gamma, ln_beta;
  Tensor k_q, b_q, k_k, b_k, k_v, b_v;
  Tensor w_up, b_up;

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
    f("w_down", s.w_down);
    f("b_down", s.b_down);
    f("ln_gamma", s.ln_gamma);
    f("ln_beta", s.ln_beta);
    f("k_q", s.k_q);
    f("b_q", s.b_q);
    f("k_k", s.k_k);
    f("b_k", s.b_k);
    f("k_v", s.k_v);
    f("b_v", s.b_v);
    f("w_up", s.w_up);
    f("b_up", s.b_up);
  }
};

AfsConfig afs_config_of(const AfsParams& p);

// Linear layers and convolutions ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
// gamma = 1, beta = 0, and a zero output projection so a fresh block is the
// identity on f_emb.
AfsParams afs_init(const AfsConfig& cfg, RngStream& rng);

struct AfsSampleCache {
  std::vector<double> f_ana;
  LayerNormRow ln;
  Tensor map;         // [side x side] normalized map fed to the convolutions
  Tensor q, k, v;     // [side x side]
  Tensor attention;   // [side x side], rows sum to 1
  std::vector<double> fused;  // A V flattened, length dim
};

struct AfsCache {
  std::uint64_t params_fingerprint = 0;
  std::vector<AfsSampleCache> samples;
};

struct AfsForward {
  Tensor f_out;  // [b x dim_o]
  AfsCache cache;
};

AfsForward afs_forward(const Tensor& f_ana, const Tensor& f_emb, const AfsParams& p);

struct AfsGrads {
  Tensor grad_f_ana;  // [b x dim_i]
  Tensor grad_f_emb;  // [b x dim_o]
  AfsParams grad_params;
};

// Throws StaleCacheError if `p` is not the parameter set the cache came from.
AfsGrads afs_backward(const AfsParams& p, const AfsCache& cache, const Tensor& grad_out);

std::uint64_t fingerprint(std::span<const Tensor* const> tensors);

}  // namespace agrl
