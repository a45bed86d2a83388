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

#include "agrl/afs.hpp"

#include <cmath>
#include <cstring>

#include "agrl/error.hpp"
#include "agrl/params.hpp"

namespace agrl {

std::size_t AfsConfig::side() const {
  return static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(dim))));
}

void AfsConfig::validate() const {
  if (dim_i == 0 || dim == 0 || dim_o == 0) throw ConfigError("AFS dimensions must be positive");
  const std::size_t s = side();
  if (s * s != dim) throw ConfigError("AFS dim " + std::to_string(dim) + " is not a perfect square");
  if (!(ln_eps >= 0.0)) throw ConfigError("AFS layer-norm eps must be nonnegative");
}

AfsConfig afs_config_of(const AfsParams& p) {
  AfsConfig c;
  c.dim_i = p.w_down.dim(0);
  c.dim = p.w_down.dim(1);
  c.dim_o = p.w_up.dim(1);
  return c;
}

namespace {

Tensor uniform_tensor(std::vector<std::size_t> shape, double bound, RngStream& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

AfsParams afs_init(const AfsConfig& cfg, RngStream& rng) {
  cfg.validate();
  AfsParams p;
  const double down = 1.0 / std::sqrt(static_cast<double>(cfg.dim_i));
  p.w_down = uniform_tensor({cfg.dim_i, cfg.dim}, down, rng);
  p.b_down = uniform_tensor({cfg.dim}, down, rng);
  p.ln_gamma = Tensor::filled({cfg.dim}, 1.0);
  p.ln_beta = Tensor({cfg.dim});
  const double conv = 1.0 / 3.0;  // fan_in = 9
  p.k_q = uniform_tensor({3, 3}, conv, rng);
  p.b_q = uniform_tensor({1}, conv, rng);
  p.k_k = uniform_tensor({3, 3}, conv, rng);
  p.b_k = uniform_tensor({1}, conv, rng);
  p.k_v = uniform_tensor({3, 3}, conv, rng);
  p.b_v = uniform_tensor({1}, conv, rng);
  p.w_up = Tensor({cfg.dim, cfg.dim_o});
  p.b_up = Tensor({cfg.dim_o});
  return p;
}

std::uint64_t fingerprint(std::span<const Tensor* const> tensors) {
  // Four interleaved FNV-1a lanes so the multiply chains can overlap.
  constexpr std::uint64_t kPrime = 0x100000001B3ULL;
  std::uint64_t lane[4] = {0xCBF29CE484222325ULL, 0x84222325CBF29CE4ULL, 0x9E3779B97F4A7C15ULL, 0xD1B54A32D192ED03ULL};
  std::uint64_t n = 0;
  for (const Tensor* t : tensors) {
    const auto d = t->data();
    std::size_t i = 0;
    for (; i + 4 <= d.size(); i += 4) {
      for (std::size_t k = 0; k < 4; ++k) {
        std::uint64_t bits;
        std::memcpy(&bits, &d[i + k], sizeof bits);
        lane[k] = (lane[k] ^ bits) * kPrime;
      }
    }
    for (; i < d.size(); ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, &d[i], sizeof bits);
      lane[0] = (lane[0] ^ bits) * kPrime;
    }
    n += d.size();
  }
  return hash_combine(hash_combine(lane[0], lane[1]), hash_combine(hash_combine(lane[2], lane[3]), n));
}

namespace {

void check_inputs(const Tensor& f_ana, const Tensor& f_emb, const AfsConfig& cfg) {
  if (f_ana.rank() != 2 || f_ana.dim(1) != cfg.dim_i)
    throw DimensionError("afs_forward: f_ana must be [b x " + std::to_string(cfg.dim_i) + "], got " +
                         f_ana.shape_string());
  if (f_emb.rank() != 2 || f_emb.dim(1) != cfg.dim_o)
    throw DimensionError("afs_forward: f_emb must be [b x " + std::to_string(cfg.dim_o) + "], got " +
                         f_emb.shape_string());
  if (f_ana.dim(0) != f_emb.dim(0)) throw DimensionError("afs_forward: batch sizes differ");
}

}  // namespace

AfsForward afs_forward(const Tensor& f_ana, const Tensor& f_emb, const AfsParams& p) {
  const AfsConfig cfg = afs_config_of(p);
  cfg.validate();
  check_inputs(f_ana, f_emb, cfg);
  const std::size_t b = f_ana.dim(0), side = cfg.side();
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.dim));

  AfsForward out{f_emb, {}};
  out.cache.params_fingerprint = fingerprint(tensors_of(p));
  out.cache.samples.resize(b);

  for (std::size_t s = 0; s < b; ++s) {
    AfsSampleCache& c = out.cache.samples[s];
    c.f_ana.assign(f_ana.row(s).begin(), f_ana.row(s).end());

    std::vector<double> z(p.b_down.data().begin(), p.b_down.data().end());
    vecmat_accum(c.f_ana, p.w_down, z);
    c.map = Tensor({side, side});
    c.ln = layer_norm_row(z, p.ln_gamma.data(), p.ln_beta.data(), cfg.ln_eps, c.map.data());

    c.q = conv2d_3x3(c.map, p.k_q, p.b_q[0]);
    c.k = conv2d_3x3(c.map, p.k_k, p.b_k[0]);
    c.v = conv2d_3x3(c.map, p.k_v, p.b_v[0]);

    Tensor scores = matmul(c.q, transpose(c.k));
    for (double& v : scores.data()) v *= scale;
    c.attention = softmax_rows(scores);
    const Tensor fused = matmul(c.attention, c.v);
    c.fused.assign(fused.data().begin(), fused.data().end());

    auto row = out.f_out.row(s);
    vecmat_accum(c.fused, p.w_up, row);
    axpy(1.0, p.b_up.data(), row);
  }
  return out;
}

AfsGrads afs_backward(const AfsParams& p, const AfsCache& cache, const Tensor& grad_out) {
  if (fingerprint(tensors_of(p)) != cache.params_fingerprint)
    throw StaleCacheError("afs_backward: cache was produced with different parameters");
  const AfsConfig cfg = afs_config_of(p);
  const std::size_t b = cache.samples.size(), side = cfg.side();
  if (grad_out.rank() != 2 || grad_out.dim(0) != b || grad_out.dim(1) != cfg.dim_o)
    throw DimensionError("afs_backward: grad_out shape " + grad_out.shape_string());
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.dim));

  AfsGrads g{Tensor({b, cfg.dim_i}), grad_out, zeros_like(p)};
  AfsParams& gp = g.grad_params;

  for (std::size_t s = 0; s < b; ++s) {
    const AfsSampleCache& c = cache.samples[s];
    const auto go = grad_out.row(s);

    outer_accum(c.fused, go, gp.w_up);
    axpy(1.0, go, gp.b_up.data());
    Tensor g_fused({side, side});
    matvec_accum(p.w_up, go, g_fused.data());

    // F = A V
    const Tensor g_attn = matmul(g_fused, transpose(c.v));
    const Tensor g_v = matmul(transpose(c.attention), g_fused);
    Tensor g_scores = softmax_rows_backward(c.attention, g_attn);
    for (double& v : g_scores.data()) v *= scale;
    // S = Q K^T
    const Tensor g_q = matmul(g_scores, c.k);
    const Tensor g_k = matmul(transpose(g_scores), c.q);

    Tensor g_map({side, side});
    auto conv_back = [&](const Tensor& kernel, const Tensor& g_conv, Tensor& g_kernel, Tensor& g_bias) {
      const Conv2dGrads cg = conv2d_3x3_backward(c.map, kernel, g_conv);
      axpy(1.0, cg.grad_x.data(), g_map.data());
      axpy(1.0, cg.grad_kernel.data(), g_kernel.data());
      g_bias[0] += cg.grad_bias;
    };
    conv_back(p.k_q, g_q, gp.k_q, gp.b_q);
    conv_back(p.k_k, g_k, gp.k_k, gp.b_k);
    conv_back(p.k_v, g_v, gp.k_v, gp.b_v);

    std::vector<double> g_z(cfg.dim);
    layer_norm_row_backward(c.ln, p.ln_gamma.data(), g_map.data(), g_z, gp.ln_gamma.data(),
                            gp.ln_beta.data());
    outer_accum(c.f_ana, g_z, gp.w_down);
    axpy(1.0, g_z, gp.b_down.data());
    matvec_accum(p.w_down, g_z, g.grad_f_ana.row(s));
  }
  return g;
}

}  // namespace agrl
