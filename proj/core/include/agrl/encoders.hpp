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

#include "agrl/fusion.hpp"
#include "agrl/tensor.hpp"

namespace agrl {

struct TextEncoderConfig {
  std::size_t dim = 32;
  std::uint64_t seed = 0x5EED0002;
};

// Frozen bag-of-words encoder: the mean of fixed seeded word vectors over
// the lowercased, punctuation-stripped words of the text, rescaled to unit
// RMS. The empty text maps to zero.
class TextEncoder {
 public:
  explicit TextEncoder(TextEncoderConfig cfg = {}) : cfg_(cfg) {}
  std::size_t dim() const noexcept { return cfg_.dim; }
  Tensor encode(std::string_view text) const;
  Tensor word_vector(std::string_view word) const;

 private:
  TextEncoderConfig cfg_;
};

// Frozen projection of concat(scene_features, query_embedding) to the
// multimodal embedding F_emb.
class EmbeddingProjector {
 public:
  EmbeddingProjector(std::size_t vision_dim, std::size_t text_dim, std::size_t dim_o,
                     std::uint64_t seed = 0x5EED0003);
  std::size_t output_dim() const noexcept { return weights_.dim(1); }
  Tensor project(const Tensor& scene_feat, const Tensor& query_emb) const;

 private:
  Tensor weights_;  // [(vision + text) x dim_o]
};

// F_R = fusion(F_ana, F_emb) for a single query; returns [dim_o].
Tensor encode_context(const Tensor& scene_feat, const Tensor& query_emb, const Tensor& f_ana,
                      const FusionParams& fusion, const EmbeddingProjector& projector);

Tensor concat(const Tensor& a, const Tensor& b);

}  // namespace agrl
