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

#include "agrl/parser.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

namespace agrl {

std::string_view to_string(FormatClass c) noexcept {
  switch (c) {
    case FormatClass::Valid:
      return "valid";
    case FormatClass::Partial:
      return "partial";
    case FormatClass::Invalid:
      return "invalid";
  }
  return "invalid";
}

namespace {

constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";
constexpr std::string_view kBboxOpen = "<bbox>";
constexpr std::string_view kBboxClose = "</bbox>";
constexpr std::size_t kMaxDigits = 6;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

struct RawBox {
  long long v[4];
};

class PayloadReader {
 public:
  explicit PayloadReader(std::string_view s) : s_(s) {}

  std::optional<std::vector<RawBox>> read() {
    skip_ws();
    std::vector<RawBox> boxes;
    // "[]" is the empty list.
    {
      const std::size_t save = pos_;
      if (eat('[')) {
        skip_ws();
        if (eat(']')) {
          skip_ws();
          if (pos_ == s_.size()) return boxes;
          return std::nullopt;
        }
      }
      pos_ = save;
    }
    while (true) {
      auto b = read_box();
      if (!b) return std::nullopt;
      boxes.push_back(*b);
      skip_ws();
      if (pos_ == s_.size()) return boxes;
      if (!eat(';')) return std::nullopt;
      skip_ws();
    }
  }

 private:
  std::optional<RawBox> read_box() {
    if (!eat('[')) return std::nullopt;
    RawBox b{};
    for (int i = 0; i < 4; ++i) {
      skip_ws();
      auto v = read_int();
      if (!v) return std::nullopt;
      b.v[i] = *v;
      skip_ws();
      if (i < 3 && !eat(',')) return std::nullopt;
    }
    if (!eat(']')) return std::nullopt;
    return b;
  }

  std::optional<long long> read_int() {
    std::size_t n = 0;
    long long v = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      if (++n > kMaxDigits) return std::nullopt;
      v = v * 10 + (s_[pos_] - '0');
      ++pos_;
    }
    if (n == 0) return std::nullopt;
    return v;
  }

  bool eat(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void skip_ws() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

struct Block {
  std::size_t begin = 0;  // offset of the opening tag
  std::size_t end = 0;    // one past the closing tag
  std::string_view inner;
};

// First opening tag whose matching close yields well-formed content.
template <class Accept>
std::optional<Block> find_block(std::string_view raw, std::string_view open,
                                std::string_view close, Accept accept) {
  std::size_t from = 0;
  while (true) {
    const std::size_t o = raw.find(open, from);
    if (o == std::string_view::npos) return std::nullopt;
    const std::size_t body = o + open.size();
    const std::size_t c = raw.find(close, body);
    if (c == std::string_view::npos) return std::nullopt;
    Block b{o, c + close.size(), raw.substr(body, c - body)};
    if (accept(b.inner)) return b;
    from = o + 1;
  }
}

bool answer_ok(std::string_view inner) { return inner.find('<') == std::string_view::npos; }

bool payload_ok(std::string_view inner) { return PayloadReader(inner).read().has_value(); }

void fill_boxes(std::string_view payload, const Canvas& canvas, ParsedResponse& out) {
  const auto raw = PayloadReader(payload).read();
  if (!raw) return;
  for (const RawBox& r : *raw) {
    auto clamp = [](long long v, int hi) {
      return static_cast<int>(std::clamp<long long>(v, 0, hi));
    };
    BBox b{clamp(r.v[0], canvas.width), clamp(r.v[1], canvas.height),
           clamp(r.v[2], canvas.width), clamp(r.v[3], canvas.height)};
    if (b.degenerate()) {
      out.warnings.push_back("dropped degenerate box [" + std::to_string(r.v[0]) + "," +
                             std::to_string(r.v[1]) + "," + std::to_string(r.v[2]) + "," +
                             std::to_string(r.v[3]) + "]");
      continue;
    }
    out.boxes.push_back(b);
  }
}

bool strictly_valid(std::string_view s, const Block& ans, const Block& box) {
  if (ans.end > box.begin) return false;
  return trim(s.substr(0, ans.begin)).empty() && trim(s.substr(ans.end, box.begin - ans.end)).empty() &&
         trim(s.substr(box.end)).empty();
}

}  // namespace

ParsedResponse parse_response(std::string_view raw, const Canvas& canvas) {
  ParsedResponse out;
  const auto ans = find_block(raw, kAnswerOpen, kAnswerClose, answer_ok);
  const auto box = find_block(raw, kBboxOpen, kBboxClose, payload_ok);

  bool keep_answer = ans.has_value();
  bool keep_box = box.has_value();
  if (ans && box) {
    if (strictly_valid(raw, *ans, *box)) {
      out.format_class = FormatClass::Valid;
    } else {
      out.format_class = FormatClass::Partial;
      keep_answer = ans->begin < box->begin;
      keep_box = !keep_answer;
      out.warnings.emplace_back("both blocks present but the response is not well ordered");
    }
  } else if (ans || box) {
    out.format_class = FormatClass::Partial;
  }

  if (keep_answer) {
    out.has_answer = true;
    out.answer_text = std::string(trim(ans->inner));
  }
  if (keep_box) {
    out.has_bbox = true;
    fill_boxes(box->inner, canvas, out);
  }
  return out;
}

FormatClass classify_format(const ParsedResponse& p) noexcept { return p.format_class; }

std::string render_response(std::string_view answer, const std::vector<BBox>& boxes) {
  std::string s;
  s += kAnswerOpen;
  s += answer;
  s += kAnswerClose;
  s += kBboxOpen;
  if (boxes.empty()) {
    s += "[]";
  } else {
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (i) s += ';';
      const BBox& b = boxes[i];
      s += '[' + std::to_string(b.sx) + ',' + std::to_string(b.sy) + ',' + std::to_string(b.ex) +
           ',' + std::to_string(b.ey) + ']';
    }
  }
  s += kBboxClose;
  return s;
}

}  // namespace agrl
