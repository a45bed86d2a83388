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

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace agrl {

// Lowercased, whitespace-tokenized caption with punctuation stripped
// (underscores are kept so labels like "left_hand" stay one token).
struct Caption {
  std::vector<std::string> tokens;

  static Caption from_text(std::string_view text);
  std::size_t size() const noexcept { return tokens.size(); }
  friend bool operator==(const Caption&, const Caption&) = default;
};

// Unit-cost edit distance over bytes.
std::size_t levenshtein_distance(std::string_view a, std::string_view b);

// 1 - d(a, b) / max(|a|, |b|); 1.0 when both are empty.
double levenshtein_ratio(std::string_view a, std::string_view b);

// Lowercase, trim, collapse internal whitespace.
std::string normalize_answer(std::string_view s);

// 1 iff the normalized strings are equal.
int exact_match(std::string_view a, std::string_view b);

// METEOR restricted to exact unigram matches (no stemming or synonyms),
// with greedy left-to-right alignment, Fmean = 10PR / (R + 9P) and
// fragmentation penalty 0.5 (chunks / matches)^3. Throws on empty reference.
double meteor_exact(const Caption& cand, const Caption& ref);

// Plain CIDEr (no length penalty, no clipping): per item, average over
// n = 1..4 of the cosine between TF-IDF n-gram vectors, times 10.
// Document frequencies are computed once from the corpus.
class CiderScorer {
 public:
  static constexpr int kMaxN = 4;

  explicit CiderScorer(const std::vector<Caption>& corpus);

  double score(const Caption& cand, const Caption& ref) const;
  double mean_score(const std::vector<Caption>& cands, const std::vector<Caption>& refs) const;

  std::size_t corpus_size() const noexcept { return corpus_size_; }

 private:
  using Ngram = std::vector<std::string>;
  std::map<Ngram, double> weights(const Caption& c, int n) const;

  std::size_t corpus_size_;
  std::map<Ngram, std::size_t> document_frequency_;
};

double cider(const std::vector<Caption>& cands, const std::vector<Caption>& refs,
             const std::vector<Caption>& corpus);

}  // namespace agrl
