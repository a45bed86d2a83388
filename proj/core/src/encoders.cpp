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

#include "agrl/encoders.hpp"

#include <cctype>
#include <cmath>
#include <string>

#include "agrl/error.hpp"
#include "agrl/ops.hpp"
#include "agrl/rng.hpp"
#include "agrl/text_metrics.hpp"

namespace agrl {

Tensor TextEncoder::word_vector(std::string_view word) const {
  RngStream rng(cfg_.seed, hash_string(word));
  Tensor v({cfg_.dim});
  const double bound = std::sqrt(3.0);  // unit variance
  for (double& x : v.data()) x = rng.uniform(-bound, bound);
  return v;
}

Tensor TextEncoder::encode(std::string_view text) const {
  const Caption words = Caption::from_text(text);
  Tensor out({cfg_.dim});
  if (words.tokens.empty()) return out;
  for (const std::string& w : words.tokens) axpy(1.0, word_vector(w).data(), out.data());
  // rescale the mean to unit RMS so the query is not drowned out by the
  // scene block in the joint projection
  const double rms = std::sqrt(dot(out.data(), out.data()) / static_cast<double>(cfg_.dim));
  if (rms > 0.0)
    for (double& x : out.data()) x /= rms;
  return out;
}

EmbeddingProjector::EmbeddingProjector(std::size_t vision_dim, std::size_t text_dim, std::size_t dim_o,
                                       std::uint64_t seed)
    : weights_({vision_dim + text_dim, dim_o}) {
  RngStream rng(seed, 0xE3B);
  // fan-in scaling per input block, so each block adds comparable variance
  const double scene_bound = std::sqrt(1.5 / static_cast<double>(vision_dim));
  const double text_bound = std::sqrt(1.5 / static_cast<double>(text_dim));
  for (std::size_t r = 0; r < vision_dim + text_dim; ++r) {
    const double bound = r < vision_dim ? scene_bound : text_bound;
    for (double& v : weights_.row(r)) v = rng.uniform(-bound, bound);
  }
}

Tensor concat(const Tensor& a, const Tensor& b) {
  std::vector<double> v(a.data().begin(), a.data().end());
  v.insert(v.end(), b.data().begin(), b.data().end());
  return Tensor::vector(std::move(v));
}

Tensor EmbeddingProjector::project(const Tensor& scene_feat, const Tensor& query_emb) const {
  if (scene_feat.size() + query_emb.size() != weights_.dim(0))
    throw DimensionError("EmbeddingProjector: input widths do not match the projection");
  const Tensor x = concat(scene_feat, query_emb);
  Tensor out({weights_.dim(1)});
  vecmat_accum(x.data(), weights_, out.data());
  return out;
}

Tensor encode_context(const Tensor& scene_feat, const Tensor& query_emb, const Tensor& f_ana,
                      const FusionParams& fusion, const EmbeddingProjector& projector) {
  const Tensor f_emb = projector.project(scene_feat, query_emb);
  const std::size_t di = f_ana.size();
  const FusionForward fw =
      fusion_forward(fusion, f_ana.reshaped({1, di}), f_emb.reshaped({1, f_emb.size()}));
  return fw.out.reshaped({fw.out.size()});
}

}  // namespace agrl
