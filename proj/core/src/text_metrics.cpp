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

#include "agrl/text_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "agrl/error.hpp"

namespace agrl {

Caption Caption::from_text(std::string_view text) {
  Caption c;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) c.tokens.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u)) {
      flush();
    } else if (std::isalnum(u) || ch == '_') {
      cur.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  flush();
  return c;
}

std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i + 1;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const std::size_t up = row[j + 1];
      const std::size_t sub = diag + (a[i] == b[j] ? 0 : 1);
      row[j + 1] = std::min({up + 1, row[j] + 1, sub});
      diag = up;
    }
  }
  return row[b.size()];
}

double levenshtein_ratio(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein_distance(a, b)) / static_cast<double>(longest);
}

std::string normalize_answer(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char ch : s) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

int exact_match(std::string_view a, std::string_view b) {
  return normalize_answer(a) == normalize_answer(b) ? 1 : 0;
}

double meteor_exact(const Caption& cand, const Caption& ref) {
  if (ref.tokens.empty()) throw ValidationError("meteor_exact: empty reference");
  if (cand.tokens.empty()) return 0.0;

  std::vector<bool> used(ref.size(), false);
  std::vector<std::ptrdiff_t> align(cand.size(), -1);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (!used[j] && cand.tokens[i] == ref.tokens[j]) {
        used[j] = true;
        align[i] = static_cast<std::ptrdiff_t>(j);
        ++matches;
        break;
      }
    }
  }
  if (matches == 0) return 0.0;

  // A chunk is a maximal run of matched candidate tokens mapped to
  // consecutive reference positions.
  std::size_t chunks = 0;
  std::ptrdiff_t prev = -2;
  bool prev_matched = false;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (align[i] < 0) {
      prev_matched = false;
      continue;
    }
    if (!prev_matched || align[i] != prev + 1) ++chunks;
    prev = align[i];
    prev_matched = true;
  }

  const double m = static_cast<double>(matches);
  const double p = m / static_cast<double>(cand.size());
  const double r = m / static_cast<double>(ref.size());
  const double fmean = 10.0 * p * r / (r + 9.0 * p);
  const double penalty = 0.5 * std::pow(static_cast<double>(chunks) / m, 3.0);
  return fmean * (1.0 - penalty);
}

namespace {

std::vector<std::vector<std::string>> ngrams(const Caption& c, int n) {
  std::vector<std::vector<std::string>> out;
  const auto un = static_cast<std::size_t>(n);
  if (c.size() < un) return out;
  for (std::size_t i = 0; i + un <= c.size(); ++i) {
    out.emplace_back(c.tokens.begin() + static_cast<std::ptrdiff_t>(i),
                     c.tokens.begin() + static_cast<std::ptrdiff_t>(i + un));
  }
  return out;
}

}  // namespace

CiderScorer::CiderScorer(const std::vector<Caption>& corpus) : corpus_size_(corpus.size()) {
  if (corpus.empty()) throw ValidationError("CIDEr: corpus must not be empty");
  for (const Caption& c : corpus) {
    std::set<Ngram> seen;
    for (int n = 1; n <= kMaxN; ++n)
      for (auto& g : ngrams(c, n)) seen.insert(std::move(g));
    for (const Ngram& g : seen) ++document_frequency_[g];
  }
}

std::map<CiderScorer::Ngram, double> CiderScorer::weights(const Caption& c, int n) const {
  std::map<Ngram, double> tf;
  const auto grams = ngrams(c, n);
  for (const auto& g : grams) tf[g] += 1.0;
  const double total = static_cast<double>(grams.size());
  const double big_n = static_cast<double>(corpus_size_);
  for (auto& [g, w] : tf) {
    const auto it = document_frequency_.find(g);
    const double df = it == document_frequency_.end() ? 1.0 : static_cast<double>(it->second);
    w = (w / total) * std::log(big_n / std::max(1.0, df));
  }
  return tf;
}

double CiderScorer::score(const Caption& cand, const Caption& ref) const {
  double sum = 0.0;
  for (int n = 1; n <= kMaxN; ++n) {
    const auto a = weights(cand, n);
    const auto b = weights(ref, n);
    double na = 0.0, nb = 0.0, num = 0.0;
    for (const auto& [g, w] : a) {
      na += w * w;
      const auto it = b.find(g);
      if (it != b.end()) num += w * it->second;
    }
    for (const auto& [g, w] : b) nb += w * w;
    if (na > 0.0 && nb > 0.0) sum += num / (std::sqrt(na) * std::sqrt(nb));
  }
  return 10.0 * sum / kMaxN;
}

double CiderScorer::mean_score(const std::vector<Caption>& cands,
                               const std::vector<Caption>& refs) const {
  if (cands.size() != refs.size()) throw ValidationError("CIDEr: candidate/reference count differ");
  if (cands.empty()) throw ValidationError("CIDEr: no items");
  double s = 0.0;
  for (std::size_t i = 0; i < cands.size(); ++i) s += score(cands[i], refs[i]);
  return s / static_cast<double>(cands.size());
}

double cider(const std::vector<Caption>& cands, const std::vector<Caption>& refs,
             const std::vector<Caption>& corpus) {
  return CiderScorer(corpus).mean_score(cands, refs);
}

}  // namespace agrl
