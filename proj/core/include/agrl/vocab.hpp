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
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "agrl/geometry.hpp"

namespace agrl {

using TokenId = std::int32_t;

class Vocab {
 public:
  explicit Vocab(std::vector<std::string> tokens);

  // Tags, scene nouns, gerunds, function words, digits and bbox punctuation.
  static Vocab standard();

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::string& token(TokenId id) const;
  // Throws ValidationError for out-of-vocabulary strings.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  bool valid(TokenId id) const noexcept { return id >= 0 && static_cast<std::size_t>(id) < size(); }

  TokenId bos() const noexcept { return bos_; }
  TokenId eos() const noexcept { return eos_; }

  // Word-like tokens are separated by a single space when detokenized;
  // tags, digits and punctuation are glued to their neighbours.
  bool is_word(TokenId id) const;

  // Inverse of encode_response / encode_text. Stops at EOS, skips BOS.
  std::string detokenize(const std::vector<TokenId>& ids) const;

  // "<answer> words </answer> <bbox> [ d , ... ] ; ... </bbox> EOS"
  std::vector<TokenId> encode_response(std::string_view answer, const std::vector<BBox>& boxes) const;
  // Lowercased words with '.' split off, followed by EOS.
  std::vector<TokenId> encode_text(std::string_view text) const;

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId bos_ = -1;
  TokenId eos_ = -1;
};

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";

}  // namespace agrl
