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
#include <functional>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "agrl/error.hpp"
#include "agrl/rng.hpp"
#include "agrl/text_metrics.hpp"

namespace agrl {
namespace {

// Memoized recursive edit distance, written independently of the library.
std::size_t oracle_distance(const std::string& a, const std::string& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == 0) return j;
    if (j == 0) return i;
    const auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const std::size_t best = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1])});
    memo[key] = best;
    return best;
  };
  return d(a.size(), b.size());
}

std::string random_string(RngStream& rng, std::size_t max_len, const std::string& alphabet = "abc") {
  std::string s;
  const auto n = rng.uniform_int(0, static_cast<std::int64_t>(max_len));
  for (int i = 0; i < n; ++i)
    s += alphabet[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(alphabet.size()) - 1))];
  return s;
}

Caption cap(std::string_view s) { return Caption::from_text(s); }

TEST(Caption, Tokenization) {
  EXPECT_EQ(cap("The Left hand, is grasping the mug.").tokens,
            (std::vector<std::string>{"the", "left", "hand", "is", "grasping", "the", "mug"}));
  EXPECT_EQ(cap("left_hand and mug").tokens, (std::vector<std::string>{"left_hand", "and", "mug"}));
  EXPECT_TRUE(cap("  ... ").tokens.empty());
}

TEST(Levenshtein, Examples) {
  EXPECT_EQ(levenshtein_ratio("abc", "abc"), 1.0);
  EXPECT_EQ(levenshtein_distance("kitten", "sitting"), 3u);
  EXPECT_NEAR(levenshtein_ratio("kitten", "sitting"), 1.0 - 3.0 / 7.0, 1e-15);
  EXPECT_EQ(levenshtein_ratio("", "ab"), 0.0);
  EXPECT_EQ(levenshtein_ratio("", ""), 1.0);
}

TEST(Levenshtein, MatchesRecursiveOracle) {
  RngStream rng(31, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::string a = random_string(rng, 7, "abcd");
    const std::string b = random_string(rng, 7, "abcd");
    ASSERT_EQ(levenshtein_distance(a, b), oracle_distance(a, b)) << a << " / " << b;
  }
}

TEST(Levenshtein, RatioSymmetricAndOneIffEqual) {
  RngStream rng(32, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::string a = random_string(rng, 6), b = random_string(rng, 6);
    ASSERT_EQ(levenshtein_ratio(a, b), levenshtein_ratio(b, a));
    ASSERT_EQ(levenshtein_ratio(a, b) == 1.0, a == b);
  }
}

TEST(Levenshtein, TriangleInequalityExhaustive) {
  // Every string over {a,b} up to length 3, all triples.
  std::vector<std::string> all = {""};
  for (std::size_t i = 0; i < all.size(); ++i)
    if (all[i].size() < 3)
      for (char ch : std::string("ab")) all.push_back(all[i] + ch);
  for (const auto& x : all)
    for (const auto& y : all)
      for (const auto& z : all)
        ASSERT_LE(levenshtein_distance(x, z), levenshtein_distance(x, y) + levenshtein_distance(y, z));
}

TEST(Levenshtein, TriangleInequalityRandomLengthFive) {
  RngStream rng(33, 0);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::string x = random_string(rng, 5), y = random_string(rng, 5), z = random_string(rng, 5);
    ASSERT_LE(levenshtein_distance(x, z), levenshtein_distance(x, y) + levenshtein_distance(y, z));
  }
}

TEST(ExactMatch, Normalization) {
  EXPECT_EQ(normalize_answer("  Two   Words "), "two words");
  EXPECT_EQ(exact_match("Mug ", "mug"), 1);
  EXPECT_EQ(exact_match("mug", "cup"), 0);
  EXPECT_EQ(exact_match("two  words", "two words"), 1);
}

TEST(Meteor, SelfMatchFormula) {
  EXPECT_NEAR(meteor_exact(cap("a b c"), cap("a b c")), 1.0 - 0.5 / 27.0, 1e-12);
  for (std::size_t m = 1; m <= 8; ++m) {
    std::string s;
    for (std::size_t i = 0; i < m; ++i) s += "w" + std::to_string(i) + " ";
    EXPECT_NEAR(meteor_exact(cap(s), cap(s)), 1.0 - 0.5 / std::pow(static_cast<double>(m), 3), 1e-12);
  }
}

TEST(Meteor, NoMatchesIsZero) { EXPECT_EQ(meteor_exact(cap("a b c"), cap("x y z")), 0.0); }

TEST(Meteor, ReorderedHandAlignment) {
  EXPECT_NEAR(meteor_exact(cap("c a b"), cap("a b c")), 1.0 - 0.5 * std::pow(2.0 / 3.0, 3), 1e-12);
}

TEST(Meteor, PartialMatchHandValue) {
  // m = 1, P = 1/2, R = 1/3, F = 10PR / (R + 9P), one chunk.
  const double p = 0.5, r = 1.0 / 3.0;
  const double f = 10 * p * r / (r + 9 * p);
  EXPECT_NEAR(meteor_exact(cap("a z"), cap("a b c")), f * (1.0 - 0.5), 1e-12);
}

TEST(Meteor, EmptyReferenceThrows) { EXPECT_THROW(meteor_exact(cap("a"), cap("")), ValidationError); }

TEST(Meteor, EmptyCandidateScoresZero) { EXPECT_EQ(meteor_exact(cap(""), cap("a")), 0.0); }

// Hand TF-IDF reference for a single pair, independent of the scorer.
double oracle_cider(const Caption& cand, const Caption& ref, const std::vector<Caption>& corpus) {
  const auto grams = [](const Caption& c, int n) {
    std::map<std::vector<std::string>, double> counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= c.size(); ++i)
      counts[std::vector<std::string>(c.tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      c.tokens.begin() + static_cast<std::ptrdiff_t>(i) + n)] += 1.0;
    return counts;
  };
  double total = 0.0;
  for (int n = 1; n <= 4; ++n) {
    std::map<std::vector<std::string>, double> df;
    for (const Caption& doc : corpus)
      for (const auto& [g, c] : grams(doc, n)) df[g] += 1.0;
    const auto tfidf = [&](const Caption& c) {
      auto counts = grams(c, n);
      double len = 0.0;
      for (auto& [g, v] : counts) len += v;
      std::map<std::vector<std::string>, double> w;
      for (auto& [g, v] : counts) {
        const double d = df.count(g) ? df[g] : 0.0;
        w[g] = (v / len) * std::log(static_cast<double>(corpus.size()) / std::max(1.0, d));
      }
      return w;
    };
    const auto a = tfidf(cand), b = tfidf(ref);
    double dotp = 0.0, na = 0.0, nb = 0.0;
    for (auto& [g, v] : a) {
      na += v * v;
      if (auto it = b.find(g); it != b.end()) dotp += v * it->second;
    }
    for (auto& [g, v] : b) nb += v * v;
    if (na > 0 && nb > 0) total += dotp / (std::sqrt(na) * std::sqrt(nb));
  }
  return 10.0 * total / 4.0;
}

TEST(Cider, IdenticalUniqueNgramsScoreTen) {
  const std::vector<Caption> corpus = {cap("alpha beta gamma delta"), cap("one two three four"),
                                       cap("red green blue cyan"), cap("north south east west")};
  const CiderScorer scorer(corpus);
  EXPECT_NEAR(scorer.score(corpus[0], corpus[0]), 10.0, 1e-12);
}

TEST(Cider, DisjointUnigramsScoreZero) {
  const std::vector<Caption> corpus = {cap("a b"), cap("c d")};
  EXPECT_EQ(CiderScorer(corpus).score(cap("a b"), cap("c d")), 0.0);
}

TEST(Cider, MatchesHandTfIdf) {
  const std::vector<Caption> corpus = {cap("the left hand is holding the mug"), cap("the right hand is cutting the bowl"),
                                       cap("the left hand is opening the drawer"), cap("the right hand is lifting the kettle")};
  const CiderScorer scorer(corpus);
  const Caption cand = cap("the left hand is holding the bowl");
  for (const Caption& ref : corpus) EXPECT_NEAR(scorer.score(cand, ref), oracle_cider(cand, ref, corpus), 1e-12);
}

TEST(Cider, PermutationInvariantAndDuplicationStable) {
  // Every candidate n-gram occurs in the corpus. Unseen n-grams take the
  // floored document frequency 1, whose idf log(N) moves with N.
  const std::vector<Caption> refs = {cap("a b c d"), cap("a c e f"), cap("x y z w")};
  const std::vector<Caption> cands = {cap("a b c"), cap("a c e"), cap("x y")};
  const double base = cider(cands, refs, refs);
  const std::vector<Caption> refs_p = {refs[2], refs[0], refs[1]};
  const std::vector<Caption> cands_p = {cands[2], cands[0], cands[1]};
  EXPECT_NEAR(cider(cands_p, refs_p, refs_p), base, 1e-12);
  std::vector<Caption> refs_d = refs, cands_d = cands;
  refs_d.insert(refs_d.end(), refs.begin(), refs.end());
  cands_d.insert(cands_d.end(), cands.begin(), cands.end());
  EXPECT_NEAR(cider(cands_d, refs_d, refs_d), base, 1e-12);
}

TEST(Cider, FreshCorpusItemsNeverLowerUniqueScore) {
  std::vector<Caption> corpus = {cap("alpha beta gamma delta"), cap("one two three four")};
  double prev = CiderScorer(corpus).score(corpus[0], cap("alpha beta gamma zeta"));
  for (int k = 0; k < 6; ++k) {
    corpus.push_back(cap("fresh" + std::to_string(k) + " words only here" + std::to_string(k)));
    const double now = CiderScorer(corpus).score(corpus[0], cap("alpha beta gamma zeta"));
    ASSERT_GE(now, prev - 1e-12);
    prev = now;
  }
}

}  // namespace
}  // namespace agrl
