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
#include <span>
#include <string_view>

namespace agrl {

// Counter-based random stream keyed by (master_seed, stream_id). Draw k of a
// stream is a pure function of (master_seed, stream_id, k), so results do not
// depend on how work is scheduled across threads. Only integer arithmetic is
// used, which keeps sequences identical across platforms.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [lo, hi] (inclusive).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Index drawn from an (unnormalized, nonnegative) weight vector.
  std::size_t categorical(std::span<const double> weights);

  // Independent child stream; same master seed, derived stream id.
  RngStream substream(std::uint64_t key) const;
  RngStream substream(std::string_view label) const;

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint64_t key0_;
  std::uint64_t key1_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) noexcept;
std::uint64_t hash_string(std::string_view s) noexcept;

}  // namespace agrl
