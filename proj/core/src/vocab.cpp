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

#include "agrl/vocab.hpp"

#include <cctype>

#include "agrl/error.hpp"
#include "agrl/synth_env.hpp"

namespace agrl {

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
      throw ValidationError("duplicate vocabulary token '" + tokens_[i] + "'");
  }
  const auto b = index_.find(std::string(kBos));
  const auto e = index_.find(std::string(kEos));
  if (e == index_.end()) throw ValidationError("vocabulary has no EOS token");
  eos_ = e->second;
  bos_ = b == index_.end() ? -1 : b->second;
}

Vocab Vocab::standard() {
  std::vector<std::string> t{std::string(kBos), std::string(kEos), "<answer>", "</answer>", "<bbox>",
                             "</bbox>"};
  for (std::string_view n : kAllLabels) t.emplace_back(n);
  for (std::string_view v : kVerbs) t.emplace_back(gerund(v));
  for (const char* w : {"left", "right", "hand", "the", "is", "none", "and", "."}) t.emplace_back(w);
  for (char d = '0'; d <= '9'; ++d) t.emplace_back(1, d);
  for (const char* p : {",", ";", "[", "]"}) t.emplace_back(p);
  return Vocab(std::move(t));
}

const std::string& Vocab::token(TokenId id) const {
  if (!valid(id)) throw ValidationError("token id " + std::to_string(id) + " out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

TokenId Vocab::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) throw ValidationError("token '" + std::string(token) + "' is not in the vocabulary");
  return it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

bool Vocab::is_word(TokenId id) const {
  const std::string& s = token(id);
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalpha(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

std::string Vocab::detokenize(const std::vector<TokenId>& ids) const {
  std::string out;
  bool prev_word = false;
  for (TokenId id : ids) {
    if (id == eos_) break;
    if (id == bos_) continue;
    const bool word = is_word(id);
    if (word && prev_word) out.push_back(' ');
    out += token(id);
    prev_word = word;
  }
  return out;
}

namespace {

void push_number(const Vocab& v, int n, std::vector<TokenId>& out) {
  for (char c : std::to_string(n)) out.push_back(v.id(std::string_view(&c, 1)));
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

}  // namespace

std::vector<TokenId> Vocab::encode_response(std::string_view answer, const std::vector<BBox>& boxes) const {
  std::vector<TokenId> out{id("<answer>")};
  for (const std::string& w : split_words(answer)) out.push_back(id(w));
  out.push_back(id("</answer>"));
  out.push_back(id("<bbox>"));
  if (boxes.empty()) {
    out.push_back(id("["));
    out.push_back(id("]"));
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (i) out.push_back(id(";"));
    out.push_back(id("["));
    const BBox& b = boxes[i];
    const int c[4] = {b.sx, b.sy, b.ex, b.ey};
    for (int k = 0; k < 4; ++k) {
      if (k) out.push_back(id(","));
      push_number(*this, c[k], out);
    }
    out.push_back(id("]"));
  }
  out.push_back(id("</bbox>"));
  out.push_back(eos_);
  return out;
}

std::vector<TokenId> Vocab::encode_text(std::string_view text) const {
  std::vector<TokenId> out;
  for (std::string w : split_words(text)) {
    for (char& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    bool period = false;
    if (w.size() > 1 && w.back() == '.') {
      w.pop_back();
      period = true;
    }
    out.push_back(id(w));
    if (period) out.push_back(id("."));
  }
  out.push_back(eos_);
  return out;
}

}  // namespace agrl
