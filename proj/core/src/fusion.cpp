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

#include "agrl/fusion.hpp"

#include <cmath>

#include "agrl/error.hpp"
#include "agrl/params.hpp"

namespace agrl {

std::string_view to_string(FusionKind k) noexcept {
  switch (k) {
    case FusionKind::None:
      return "none";
    case FusionKind::Concat:
      return "concat";
    case FusionKind::Sum:
      return "sum";
    case FusionKind::Mlp:
      return "mlp";
    case FusionKind::CrossAttention:
      return "cross_attention";
    case FusionKind::Afs:
      return "afs";
  }
  return "none";
}

FusionKind fusion_kind_from_string(std::string_view name) {
  for (FusionKind k : {FusionKind::None, FusionKind::Concat, FusionKind::Sum, FusionKind::Mlp,
                       FusionKind::CrossAttention, FusionKind::Afs}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown fusion variant '" + std::string(name) + "'");
}

FusionKind FusionParams::kind() const noexcept { return static_cast<FusionKind>(block.index()); }

namespace {

Tensor uniform_tensor(std::vector<std::size_t> shape, std::size_t fan_in, RngStream& rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

// Row-token attention over [side x side] maps; shared by cross-attention.
Tensor attend(const Tensor& q, const Tensor& k, double scale) {
  Tensor s = matmul(q, transpose(k));
  for (double& v : s.data()) v *= scale;
  return softmax_rows(s);
}

}  // namespace

FusionParams fusion_init(FusionKind kind, const AfsConfig& cfg, RngStream& rng) {
  cfg.validate();
  const std::size_t di = cfg.dim_i, d = cfg.dim, dout = cfg.dim_o;
  switch (kind) {
    case FusionKind::None:
      return {NoFusionParams{}};
    case FusionKind::Concat:
      return {ConcatFusionParams{uniform_tensor({dout + di, dout}, dout + di, rng),
                                 uniform_tensor({dout}, dout + di, rng)}};
    case FusionKind::Sum:
      return {SumFusionParams{Tensor({di, dout}), Tensor({dout})}};
    case FusionKind::Mlp:
      return {MlpFusionParams{uniform_tensor({di, d}, di, rng), uniform_tensor({d}, di, rng),
                              Tensor({d, dout}), Tensor({dout})}};
    case FusionKind::CrossAttention:
      return {CrossAttentionParams{uniform_tensor({dout, d}, dout, rng), uniform_tensor({di, d}, di, rng),
                                   uniform_tensor({di, d}, di, rng), Tensor({d, dout}),
                                   Tensor({dout})}};
    case FusionKind::Afs:
      return {afs_init(cfg, rng)};
  }
  throw ConfigError("unknown fusion variant");
}

namespace {

struct Dims {
  std::size_t b, di, dout;
};

Dims check(const Tensor& f_ana, const Tensor& f_emb) {
  if (f_ana.rank() != 2 || f_emb.rank() != 2 || f_ana.dim(0) != f_emb.dim(0))
    throw DimensionError("fusion: expected [b x dim_i] and [b x dim_o] inputs");
  return {f_ana.dim(0), f_ana.dim(1), f_emb.dim(1)};
}

void expect_rows(const Tensor& w, std::size_t rows, std::size_t cols, const char* what) {
  if (w.rank() != 2 || w.dim(0) != rows || w.dim(1) != cols)
    throw DimensionError(std::string("fusion: parameter ") + what + " has shape " + w.shape_string());
}

struct ForwardVisitor {
  const Tensor& f_ana;
  const Tensor& f_emb;
  FusionForward& fw;

  void operator()(const NoFusionParams&) const {}

  void operator()(const ConcatFusionParams& p) const {
    const Dims d = check(f_ana, f_emb);
    expect_rows(p.w, d.dout + d.di, p.w.dim(1), "concat.w");
    fw.out = Tensor({d.b, p.w.dim(1)});
    for (std::size_t s = 0; s < d.b; ++s) {
      auto o = fw.out.row(s);
      std::vector<double> x(f_emb.row(s).begin(), f_emb.row(s).end());
      x.insert(x.end(), f_ana.row(s).begin(), f_ana.row(s).end());
      vecmat_accum(x, p.w, o);
      axpy(1.0, p.b.data(), o);
    }
  }

  void operator()(const SumFusionParams& p) const {
    const Dims d = check(f_ana, f_emb);
    expect_rows(p.w, d.di, d.dout, "sum.w");
    for (std::size_t s = 0; s < d.b; ++s) {
      auto o = fw.out.row(s);
      vecmat_accum(f_ana.row(s), p.w, o);
      axpy(1.0, p.b.data(), o);
    }
  }

  void operator()(const MlpFusionParams& p) const {
    const Dims d = check(f_ana, f_emb);
    expect_rows(p.w1, d.di, p.w1.dim(1), "mlp.w1");
    expect_rows(p.w2, p.w1.dim(1), d.dout, "mlp.w2");
    fw.cache.hidden = Tensor({d.b, p.w1.dim(1)});
    for (std::size_t s = 0; s < d.b; ++s) {
      auto h = fw.cache.hidden.row(s);
      std::copy(p.b1.data().begin(), p.b1.data().end(), h.begin());
      vecmat_accum(f_ana.row(s), p.w1, h);
      for (double& v : h) v = std::tanh(v);
      auto o = fw.out.row(s);
      vecmat_accum(h, p.w2, o);
      axpy(1.0, p.b2.data(), o);
    }
  }

  void operator()(const CrossAttentionParams& p) const {
    const Dims d = check(f_ana, f_emb);
    const std::size_t dim = p.w_q.dim(1);
    AfsConfig shape_cfg{d.di, dim, d.dout};
    shape_cfg.validate();
    const std::size_t side = shape_cfg.side();
    expect_rows(p.w_q, d.dout, dim, "cross.w_q");
    expect_rows(p.w_k, d.di, dim, "cross.w_k");
    expect_rows(p.w_v, d.di, dim, "cross.w_v");
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    fw.cache.fused = Tensor({d.b, dim});
    for (std::size_t s = 0; s < d.b; ++s) {
      Tensor q({side, side}), k({side, side}), v({side, side});
      vecmat_accum(f_emb.row(s), p.w_q, q.data());
      vecmat_accum(f_ana.row(s), p.w_k, k.data());
      vecmat_accum(f_ana.row(s), p.w_v, v.data());
      Tensor a = attend(q, k, scale);
      const Tensor f = matmul(a, v);
      std::copy(f.data().begin(), f.data().end(), fw.cache.fused.row(s).begin());
      auto o = fw.out.row(s);
      vecmat_accum(f.data(), p.w_up, o);
      axpy(1.0, p.b_up.data(), o);
      fw.cache.q.push_back(std::move(q));
      fw.cache.k.push_back(std::move(k));
      fw.cache.v.push_back(std::move(v));
      fw.cache.a.push_back(std::move(a));
    }
  }

  void operator()(const AfsParams& p) const {
    AfsForward r = afs_forward(f_ana, f_emb, p);
    fw.out = std::move(r.f_out);
    fw.cache.afs = std::move(r.cache);
  }
};

struct BackwardVisitor {
  const FusionCache& c;
  const Tensor& g_out;
  FusionGrads& g;

  void operator()(const NoFusionParams&) const {}

  void operator()(const ConcatFusionParams& p) const {
    auto& gp = std::get<ConcatFusionParams>(g.grad_params.block);
    const std::size_t dout = c.f_emb.dim(1), di = c.f_ana.dim(1);
    g.grad_f_emb.fill(0.0);
    for (std::size_t s = 0; s < c.f_ana.dim(0); ++s) {
      const auto go = g_out.row(s);
      std::vector<double> x(c.f_emb.row(s).begin(), c.f_emb.row(s).end());
      x.insert(x.end(), c.f_ana.row(s).begin(), c.f_ana.row(s).end());
      outer_accum(x, go, gp.w);
      axpy(1.0, go, gp.b.data());
      std::vector<double> gx(dout + di, 0.0);
      matvec_accum(p.w, go, gx);
      std::copy_n(gx.begin(), dout, g.grad_f_emb.row(s).begin());
      std::copy_n(gx.begin() + static_cast<std::ptrdiff_t>(dout), di, g.grad_f_ana.row(s).begin());
    }
  }

  void operator()(const SumFusionParams& p) const {
    auto& gp = std::get<SumFusionParams>(g.grad_params.block);
    for (std::size_t s = 0; s < c.f_ana.dim(0); ++s) {
      const auto go = g_out.row(s);
      outer_accum(c.f_ana.row(s), go, gp.w);
      axpy(1.0, go, gp.b.data());
      matvec_accum(p.w, go, g.grad_f_ana.row(s));
    }
  }

  void operator()(const MlpFusionParams& p) const {
    auto& gp = std::get<MlpFusionParams>(g.grad_params.block);
    for (std::size_t s = 0; s < c.f_ana.dim(0); ++s) {
      const auto go = g_out.row(s);
      const auto h = c.hidden.row(s);
      outer_accum(h, go, gp.w2);
      axpy(1.0, go, gp.b2.data());
      std::vector<double> gh(h.size(), 0.0);
      matvec_accum(p.w2, go, gh);
      for (std::size_t j = 0; j < gh.size(); ++j) gh[j] *= 1.0 - h[j] * h[j];
      outer_accum(c.f_ana.row(s), gh, gp.w1);
      axpy(1.0, gh, gp.b1.data());
      matvec_accum(p.w1, gh, g.grad_f_ana.row(s));
    }
  }

  void operator()(const CrossAttentionParams& p) const {
    auto& gp = std::get<CrossAttentionParams>(g.grad_params.block);
    const std::size_t dim = p.w_q.dim(1);
    const std::size_t side = c.q.front().dim(0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::size_t s = 0; s < c.f_ana.dim(0); ++s) {
      const auto go = g_out.row(s);
      outer_accum(c.fused.row(s), go, gp.w_up);
      axpy(1.0, go, gp.b_up.data());
      Tensor g_f({side, side});
      matvec_accum(p.w_up, go, g_f.data());
      const Tensor g_a = matmul(g_f, transpose(c.v[s]));
      const Tensor g_v = matmul(transpose(c.a[s]), g_f);
      Tensor g_s = softmax_rows_backward(c.a[s], g_a);
      for (double& v : g_s.data()) v *= scale;
      const Tensor g_q = matmul(g_s, c.k[s]);
      const Tensor g_k = matmul(transpose(g_s), c.q[s]);
      outer_accum(c.f_emb.row(s), g_q.data(), gp.w_q);
      outer_accum(c.f_ana.row(s), g_k.data(), gp.w_k);
      outer_accum(c.f_ana.row(s), g_v.data(), gp.w_v);
      auto gemb = g.grad_f_emb.row(s);
      matvec_accum(p.w_q, g_q.data(), gemb);
      auto gana = g.grad_f_ana.row(s);
      matvec_accum(p.w_k, g_k.data(), gana);
      matvec_accum(p.w_v, g_v.data(), gana);
    }
  }

  void operator()(const AfsParams& p) const {
    AfsGrads r = afs_backward(p, c.afs, g_out);
    g.grad_f_ana = std::move(r.grad_f_ana);
    g.grad_f_emb = std::move(r.grad_f_emb);
    g.grad_params.block = std::move(r.grad_params);
  }
};

}  // namespace

FusionForward fusion_forward(const FusionParams& p, const Tensor& f_ana, const Tensor& f_emb) {
  check(f_ana, f_emb);
  FusionForward fw{f_emb, {}};
  fw.cache.params_fingerprint = fingerprint(tensors_of(p));
  fw.cache.f_ana = f_ana;
  fw.cache.f_emb = f_emb;
  std::visit(ForwardVisitor{f_ana, f_emb, fw}, p.block);
  return fw;
}

FusionGrads fusion_backward(const FusionParams& p, const FusionCache& cache, const Tensor& grad_out) {
  if (fingerprint(tensors_of(p)) != cache.params_fingerprint)
    throw StaleCacheError("fusion_backward: cache was produced with different parameters");
  if (grad_out.rank() != 2 || grad_out.dim(0) != cache.f_emb.dim(0))
    throw DimensionError("fusion_backward: grad_out shape " + grad_out.shape_string());
  // Residual variants pass grad_out straight through to f_emb.
  FusionGrads g{Tensor(cache.f_ana.shape()), grad_out, zeros_like(p)};
  std::visit(BackwardVisitor{cache, grad_out, g}, p.block);
  return g;
}

}  // namespace agrl
