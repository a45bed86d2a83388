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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agrl/fusion.hpp"
#include "agrl/params.hpp"
#include "agrl/rewards.hpp"
#include "agrl/seq_model.hpp"

namespace agrl {

enum class KlEstimator { Exact, K3 };

struct GrpoConfig {
  double eps_adv = 1e-4;
  double eps_low = 0.2;
  double eps_high = 0.28;
  double beta = 0.04;
  // Use PPO's min(rho A, clip(rho) A) instead of the literal clip(rho) A.
  bool ppo_min = false;
  KlEstimator kl_estimator = KlEstimator::Exact;

  void validate() const;
};

// Stage-2 policy: response decoder plus the fusion block that builds its
// context. Both are trained by the RL stage.
struct ResponsePolicy {
  SeqModelParams decoder;
  FusionParams fusion;
  TokenId bos = 0;
  TokenId eos = 1;

  template <class F>
  void for_each(F&& f) {
    decoder.for_each([&](std::string_view n, Tensor& t) { f("decoder." + std::string(n), t); });
    fusion.for_each([&](std::string_view n, Tensor& t) { f("fusion." + std::string(n), t); });
  }
  template <class F>
  void for_each(F&& f) const {
    decoder.for_each([&](std::string_view n, const Tensor& t) { f("decoder." + std::string(n), t); });
    fusion.for_each([&](std::string_view n, const Tensor& t) { f("fusion." + std::string(n), t); });
  }
};

enum class PolicyRole { Current, Old, Reference };

struct PolicySnapshot {
  PolicyRole role = PolicyRole::Current;
  ResponsePolicy params;
};

struct Rollout {
  std::string query_id;
  std::vector<TokenId> tokens;
  std::vector<double> old_logprobs;  // one per token, from the sampling policy
  std::string raw_response;
  RewardBreakdown reward;
};

struct RolloutGroup {
  std::string query_id;
  Tensor f_ana;  // [dim_i]
  Tensor f_emb;  // [dim_o]
  std::vector<Rollout> rollouts;
  std::vector<double> advantages;
};

struct GroupBatch {
  std::size_t group_size = 4;
  std::vector<RolloutGroup> groups;

  // Every group has exactly group_size rollouts (>= 2), each with one old
  // log-probability per token.
  void validate() const;
};

// (r_i - mean) / (population std + eps_adv). Throws for fewer than 2 rewards.
std::vector<double> group_advantages(std::span<const double> rewards, double eps_adv);

double asym_clip(double rho, double eps_low, double eps_high) noexcept;

// Exact categorical KL(p || q). Throws NumericError if q has a zero where
// p does not.
double token_kl(std::span<const double> p, std::span<const double> q);

struct LossResult {
  double objective = 0.0;  // to be maximized
  double mean_kl = 0.0;    // token-averaged like the objective
  double clip_fraction = 0.0;
  std::size_t tokens = 0;
  // phi_{i,t} = surrogate - beta * KL for each rollout, batch order.
  std::vector<std::vector<double>> per_token_terms;
  std::optional<ResponsePolicy> grads;
};

// Token-level group average: mean over tokens of each rollout, then over
// the rollouts of a group, then over groups.
LossResult sgrpo_loss(const GroupBatch& batch, const ResponsePolicy& current, const ResponsePolicy& reference,
                      const GrpoConfig& cfg, bool with_grad = true, std::size_t threads = 1);

using PolicyOptimizer = AdamW<ResponsePolicy>;

// One AdamW ascent step on the objective. Throws NumericError (leaving the
// parameters untouched) when a gradient is not finite.
void update_step(ResponsePolicy& current, const ResponsePolicy& grads, PolicyOptimizer& optimizer, double lr,
                 double weight_decay);

}  // namespace agrl
