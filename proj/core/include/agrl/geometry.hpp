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
#include <utility>
#include <vector>

namespace agrl {

struct Canvas {
  int width = 64;
  int height = 64;
  friend bool operator==(const Canvas&, const Canvas&) = default;
};

// Half-open integer pixel box [sx, ex) x [sy, ey).
struct BBox {
  int sx = 0;
  int sy = 0;
  int ex = 0;
  int ey = 0;

  int width() const noexcept { return ex - sx; }
  int height() const noexcept { return ey - sy; }
  long long area() const noexcept {
    return static_cast<long long>(width()) * static_cast<long long>(height());
  }
  bool degenerate() const noexcept { return sx >= ex || sy >= ey; }
  bool within(const Canvas& c) const noexcept {
    return sx >= 0 && sy >= 0 && ex <= c.width && ey <= c.height && !degenerate();
  }
  friend bool operator==(const BBox&, const BBox&) = default;
};

class Mask {
 public:
  Mask(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  Canvas canvas() const noexcept { return {width_, height_}; }

  bool get(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }
  void fill_box(const BBox& b);

  long long count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }
  int width_;
  int height_;
  std::vector<std::uint8_t> bits_;
};

// Union of filled rectangles. Throws ValidationError for boxes outside the
// canvas or degenerate boxes.
Mask rasterize_boxes(const std::vector<BBox>& boxes, const Canvas& canvas);

struct Overlap {
  long long intersection = 0;
  long long union_ = 0;
};
Overlap mask_overlap(const Mask& a, const Mask& b);

// |a n b| / |a u b|; two empty masks score 1.0 (correct abstention).
double mask_iou(const Mask& a, const Mask& b);

// Cumulative IoU: sum of intersections over sum of unions. Pairs whose union
// is empty contribute nothing; if every pair is empty the metric is
// undefined and ValidationError is thrown.
double ciou(const std::vector<std::pair<Mask, Mask>>& pairs);

// Accumulator form of ciou for streaming evaluation.
class CumulativeIou {
 public:
  void add(const Mask& pred, const Mask& gt);
  bool defined() const noexcept { return union_ > 0; }
  double value() const;
  long long intersection() const noexcept { return intersection_; }
  long long union_total() const noexcept { return union_; }

 private:
  long long intersection_ = 0;
  long long union_ = 0;
};

// Row-major run-length encoding: alternating run lengths starting with a
// (possibly zero-length) run of unset pixels.
std::vector<int> mask_to_rle(const Mask& m);
Mask mask_from_rle(const std::vector<int>& counts, int width, int height);

}  // namespace agrl
