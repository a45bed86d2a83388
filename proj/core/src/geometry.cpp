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

#include "agrl/geometry.hpp"

#include <numeric>
#include <string>

#include "agrl/error.hpp"

namespace agrl {

Mask::Mask(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw ValidationError("mask dimensions must be positive");
  bits_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

void Mask::fill_box(const BBox& b) {
  for (int y = b.sy; y < b.ey; ++y)
    for (int x = b.sx; x < b.ex; ++x) bits_[index(x, y)] = 1;
}

long long Mask::count() const noexcept {
  return std::accumulate(bits_.begin(), bits_.end(), 0LL);
}

Mask rasterize_boxes(const std::vector<BBox>& boxes, const Canvas& canvas) {
  Mask m(canvas.width, canvas.height);
  for (const BBox& b : boxes) {
    if (!b.within(canvas)) {
      throw ValidationError("box [" + std::to_string(b.sx) + "," + std::to_string(b.sy) + "," +
                            std::to_string(b.ex) + "," + std::to_string(b.ey) +
                            "] is outside the canvas or degenerate");
    }
    m.fill_box(b);
  }
  return m;
}

Overlap mask_overlap(const Mask& a, const Mask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionError("mask dimensions differ");
  }
  Overlap o;
  const auto& ab = a.bits();
  const auto& bb = b.bits();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    o.intersection += ab[i] & bb[i];
    o.union_ += ab[i] | bb[i];
  }
  return o;
}

double mask_iou(const Mask& a, const Mask& b) {
  const Overlap o = mask_overlap(a, b);
  if (o.union_ == 0) return 1.0;
  return static_cast<double>(o.intersection) / static_cast<double>(o.union_);
}

void CumulativeIou::add(const Mask& pred, const Mask& gt) {
  const Overlap o = mask_overlap(pred, gt);
  intersection_ += o.intersection;
  union_ += o.union_;
}

double CumulativeIou::value() const {
  if (union_ == 0) throw ValidationError("cIoU is undefined: every union is empty");
  return static_cast<double>(intersection_) / static_cast<double>(union_);
}

double ciou(const std::vector<std::pair<Mask, Mask>>& pairs) {
  if (pairs.empty()) throw ValidationError("cIoU is undefined for an empty list");
  CumulativeIou acc;
  for (const auto& [pred, gt] : pairs) acc.add(pred, gt);
  return acc.value();
}

std::vector<int> mask_to_rle(const Mask& m) {
  std::vector<int> counts;
  std::uint8_t current = 0;
  int run = 0;
  for (std::uint8_t bit : m.bits()) {
    if (bit != current) {
      counts.push_back(run);
      run = 0;
      current = bit;
    }
    ++run;
  }
  counts.push_back(run);
  return counts;
}

Mask mask_from_rle(const std::vector<int>& counts, int width, int height) {
  Mask m(width, height);
  long long pos = 0;
  const long long total = static_cast<long long>(width) * height;
  bool value = false;
  for (int c : counts) {
    if (c < 0 || pos + c > total) throw ValidationError("RLE counts exceed the mask size");
    if (value) {
      for (long long i = pos; i < pos + c; ++i)
        m.set(static_cast<int>(i % width), static_cast<int>(i / width));
    }
    pos += c;
    value = !value;
  }
  if (pos != total) throw ValidationError("RLE counts do not cover the mask");
  return m;
}

}  // namespace agrl
