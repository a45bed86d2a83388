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

#include "agrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "agrl/error.hpp"
#include "agrl/parallel.hpp"

namespace agrl {

void GrpoConfig::validate() const {
  if (!(eps_adv > 0.0)) throw ConfigError("eps_adv must be positive");
  if (!(eps_low > 0.0)) throw ConfigError("eps_low must be positive");
  if (!(eps_high >= eps_low)) throw ConfigError("eps_high must be >= eps_low");
  if (!(beta >= 0.0)) throw ConfigError("beta must be nonnegative");
}

void GroupBatch::validate() const {
  if (group_size < 2) throw ValidationError("group size must be at least 2");
  for (const RolloutGroup& g : groups) {
    if (g.rollouts.size() != group_size)
      throw ValidationError("group '" + g.query_id + "' has " + std::to_string(g.rollouts.size()) +
                            " rollouts, expected " + std::to_string(group_size));
    if (g.advantages.size() != group_size) throw ValidationError("group '" + g.query_id + "' lacks advantages");
    for (const Rollout& r : g.rollouts) {
      if (r.tokens.empty()) throw ValidationError("rollout with no tokens");
      if (r.old_logprobs.size() != r.tokens.size())
        throw ValidationError("rollout is missing old log-probabilities");
    }
  }
}

std::vector<double> group_advantages(std::span<const double> rewards, double eps_adv) {
  if (rewards.size() < 2) throw ValidationError("group_advantages: need at least 2 rewards");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> adv(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / (sd + eps_adv);
  return adv;
}

double asym_clip(double rho, double eps_low, double eps_high) noexcept {
  return std::clamp(rho, 1.0 - eps_low, 1.0 + eps_high);
}

double token_kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimensionError("token_kl: distributions differ in length");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) throw NumericError("token_kl: infinite KL (reference assigns zero mass)");
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

namespace {

struct GroupResult {
  double objective = 0.0;
  double kl = 0.0;
  std::size_t clipped = 0;
  std::size_t tokens = 0;
  std::vector<std::vector<double>> terms;
  std::optional<ResponsePolicy> grads;
};

GroupResult group_loss(const RolloutGroup& g, double weight, const ResponsePolicy& cur, const ResponsePolicy& ref,
                       const GrpoConfig& cfg, bool with_grad) {
  GroupResult out;
  const std::size_t V = cur.decoder.vocab_size();
  const Tensor f_ana = g.f_ana.reshaped({1, g.f_ana.size()});
  const Tensor f_emb = g.f_emb.reshaped({1, g.f_emb.size()});
  const FusionForward fc = fusion_forward(cur.fusion, f_ana, f_emb);
  const Tensor ctx_ref = fusion_forward(ref.fusion, f_ana, f_emb).out;
  const auto ctx = fc.out.data();

  std::vector<double> grad_ctx(ctx.size(), 0.0);
  if (with_grad) out.grads = zeros_like(cur);

  const double lo = 1.0 - cfg.eps_low, hi = 1.0 + cfg.eps_high;
  for (std::size_t i = 0; i < g.rollouts.size(); ++i) {
    const Rollout& r = g.rollouts[i];
    const double adv = g.advantages[i];
    const std::size_t T = r.tokens.size();
    const SequenceTrace tc = logprob_of(cur.decoder, ctx, r.tokens, cur.bos);
    const SequenceTrace tr = logprob_of(ref.decoder, ctx_ref.data(), r.tokens, ref.bos);
    const double w = weight / static_cast<double>(T);

    std::vector<double> terms(T);
    std::vector<double> gl(with_grad ? T * V : 0, 0.0);
    std::vector<double> p(V), q(V);
    for (std::size_t t = 0; t < T; ++t) {
      const auto lp = tc.log_probs_at(t, V);
      const auto lr = tr.log_probs_at(t, V);
      const auto tok = static_cast<std::size_t>(r.tokens[t]);
      const double rho = std::exp(tc.token_logprobs[t] - r.old_logprobs[t]);
      const double clipped = asym_clip(rho, cfg.eps_low, cfg.eps_high);
      const bool interior = rho > lo && rho < hi;
      if (!interior && rho != clipped) ++out.clipped;

      double surrogate, coef;
      if (cfg.ppo_min) {
        const double unclipped = rho * adv;
        const double clip_term = clipped * adv;
        surrogate = std::min(unclipped, clip_term);
        coef = (unclipped <= clip_term) ? adv * rho : 0.0;
      } else {
        surrogate = clipped * adv;
        coef = interior ? adv * rho : 0.0;
      }

      double kl;
      for (std::size_t v = 0; v < V; ++v) {
        p[v] = std::exp(lp[v]);
        q[v] = std::exp(lr[v]);
      }
      double k3_ratio = 0.0;
      if (cfg.kl_estimator == KlEstimator::Exact) {
        kl = 0.0;
        for (std::size_t v = 0; v < V; ++v) kl += p[v] * (lp[v] - lr[v]);
      } else {
        const double log_ratio = lr[tok] - lp[tok];
        k3_ratio = std::exp(log_ratio);
        kl = k3_ratio - log_ratio - 1.0;
      }

      terms[t] = surrogate - cfg.beta * kl;
      out.objective += w * terms[t];
      out.kl += w * kl;

      if (with_grad) {
        std::span<double> g_t(gl.data() + t * V, V);
        // d logp(tok) / d logits = onehot - p
        for (std::size_t v = 0; v < V; ++v) g_t[v] = -coef * p[v];
        g_t[tok] += coef;
        if (cfg.beta != 0.0) {
          if (cfg.kl_estimator == KlEstimator::Exact) {
            for (std::size_t v = 0; v < V; ++v) g_t[v] -= cfg.beta * p[v] * (lp[v] - lr[v] - kl);
          } else {
            const double d = 1.0 - k3_ratio;  // d k3 / d logp(tok)
            for (std::size_t v = 0; v < V; ++v) g_t[v] += cfg.beta * d * p[v];
            g_t[tok] -= cfg.beta * d;
          }
        }
        for (double& x : g_t) x *= w;
      }
    }
    out.tokens += T;
    out.terms.push_back(std::move(terms));
    if (with_grad) seq_backward(cur.decoder, ctx, tc, gl, {}, cur.bos, out.grads->decoder, grad_ctx);
  }

  if (with_grad) {
    FusionGrads fg = fusion_backward(cur.fusion, fc.cache, Tensor({1, grad_ctx.size()}, grad_ctx));
    out.grads->fusion = std::move(fg.grad_params);
  }
  return out;
}

}  // namespace

LossResult sgrpo_loss(const GroupBatch& batch, const ResponsePolicy& current, const ResponsePolicy& reference,
                      const GrpoConfig& cfg, bool with_grad, std::size_t threads) {
  cfg.validate();
  batch.validate();
  LossResult res;
  if (batch.groups.empty()) return res;
  const double weight =
      1.0 / (static_cast<double>(batch.groups.size()) * static_cast<double>(batch.group_size));

  std::vector<GroupResult> parts(batch.groups.size());
  parallel_for(batch.groups.size(), threads, [&](std::size_t k) {
    parts[k] = group_loss(batch.groups[k], weight, current, reference, cfg, with_grad);
  });

  std::size_t clipped = 0;
  if (with_grad) res.grads = zeros_like(current);
  for (GroupResult& p : parts) {
    res.objective += p.objective;
    res.mean_kl += p.kl;
    clipped += p.clipped;
    res.tokens += p.tokens;
    for (auto& t : p.terms) res.per_token_terms.push_back(std::move(t));
    if (with_grad) add_into(*res.grads, *p.grads);
  }
  res.clip_fraction = res.tokens ? static_cast<double>(clipped) / static_cast<double>(res.tokens) : 0.0;
  return res;
}

void update_step(ResponsePolicy& current, const ResponsePolicy& grads, PolicyOptimizer& optimizer, double lr,
                 double weight_decay) {
  optimizer.step(current, grads, lr, weight_decay, /*ascent=*/true);
}

}  // namespace agrl
