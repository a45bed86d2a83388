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

#include "agrl/diagnostics.hpp"

#include "agrl/ops.hpp"
#include "agrl/seq_model.hpp"

namespace agrl {

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, RngStream& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-scale, scale);
  return t;
}

constexpr std::size_t kToyVocab = 7;

}  // namespace

void randomize(FusionParams& p, RngStream& rng, double scale) {
  p.for_each([&](std::string_view, Tensor& t) {
    for (double& v : t.data()) v = rng.uniform(-scale, scale);
  });
  if (auto* afs = std::get_if<AfsParams>(&p.block)) {
    // keep gamma away from zero so the layer norm path stays well conditioned
    for (double& v : afs->ln_gamma.data()) v += 1.0;
  }
}

ToyGrpoProblem make_toy_grpo(std::uint64_t seed, FusionKind fusion, std::size_t groups, std::size_t group_size) {
  RngStream rng(seed, hash_string("toy-grpo"));
  const AfsConfig afs{5, 4, 6, 1e-5};
  const SeqModelConfig mc{kToyVocab, 3, 4, afs.dim_o, 0, 1};

  ToyGrpoProblem p;
  p.current.decoder = seq_model_init(mc, rng);
  p.current.fusion = fusion_init(fusion, afs, rng);
  randomize(p.current.fusion, rng);
  p.current.bos = mc.bos;
  p.current.eos = mc.eos;
  p.reference = p.current;
  for (Tensor* t : tensors_of(p.reference))
    for (double& v : t->data()) v += rng.uniform(-0.2, 0.2);

  p.batch.group_size = group_size;
  for (std::size_t k = 0; k < groups; ++k) {
    RolloutGroup g;
    g.query_id = "toy#" + std::to_string(k);
    g.f_ana = random_tensor({afs.dim_i}, rng);
    g.f_emb = random_tensor({afs.dim_o}, rng);
    const Tensor ctx = fusion_forward(p.current.fusion, g.f_ana.reshaped({1, afs.dim_i}),
                                      g.f_emb.reshaped({1, afs.dim_o})).out;
    std::vector<double> rewards;
    for (std::size_t i = 0; i < group_size; ++i) {
      Rollout r;
      r.query_id = g.query_id;
      const auto len = static_cast<std::size_t>(rng.uniform_int(1, 5));
      for (std::size_t t = 0; t < len; ++t) r.tokens.push_back(static_cast<TokenId>(rng.uniform_int(2, kToyVocab - 1)));
      const SequenceTrace tr = logprob_of(p.current.decoder, ctx.data(), r.tokens, mc.bos);
      for (double lp : tr.token_logprobs) r.old_logprobs.push_back(lp + rng.uniform(-0.4, 0.4));
      rewards.push_back(rng.uniform(0.0, 4.0));
      g.rollouts.push_back(std::move(r));
    }
    g.advantages = group_advantages(rewards, p.config.eps_adv);
    p.batch.groups.push_back(std::move(g));
  }
  return p;
}

namespace {

GradcheckCase check_sgrpo(std::uint64_t seed, FusionKind kind, const GrpoConfig& cfg, const std::string& name) {
  ToyGrpoProblem p = make_toy_grpo(seed, kind);
  p.config = cfg;
  const LossResult res = sgrpo_loss(p.batch, p.current, p.reference, p.config);
  const std::function<double(const ResponsePolicy&)> f = [&](const ResponsePolicy& cur) {
    return sgrpo_loss(p.batch, cur, p.reference, p.config, false).objective;
  };
  const auto num = finite_diff_params(p.current, f);
  return {name, relative_error(flatten(*res.grads), num)};
}

GradcheckCase check_seq_model(std::uint64_t seed) {
  RngStream rng(seed, hash_string("gc-seq"));
  const SeqModelConfig mc{kToyVocab, 3, 5, 4, 0, 1};
  const SeqModelParams m = seq_model_init(mc, rng);
  const Tensor ctx = random_tensor({4}, rng);
  std::vector<TokenId> target;
  for (int t = 0; t < 5; ++t) target.push_back(static_cast<TokenId>(rng.uniform_int(1, kToyVocab - 1)));
  const SftResult res = sft_loss_and_grad(m, ctx.data(), target, mc.bos);
  const std::function<double(const SeqModelParams&)> f = [&](const SeqModelParams& q) {
    return sft_loss_and_grad(q, ctx.data(), target, mc.bos).loss;
  };
  std::vector<double> analytic = flatten(res.grads);
  std::vector<double> numeric = finite_diff_params(m, f);
  // context gradient
  const ScalarFn fc = [&](const Tensor& c) { return sft_loss_and_grad(m, c.data(), target, mc.bos).loss; };
  const Tensor gc = finite_diff_grad(fc, ctx);
  analytic.insert(analytic.end(), res.grad_ctx.begin(), res.grad_ctx.end());
  numeric.insert(numeric.end(), gc.data().begin(), gc.data().end());
  return {"seq_model.sft", relative_error(analytic, numeric)};
}

GradcheckCase check_fusion(std::uint64_t seed, FusionKind kind) {
  RngStream rng(seed, hash_string("gc-fusion"));
  const AfsConfig cfg{6, 9, 5, 1e-5};
  FusionParams p = fusion_init(kind, cfg, rng);
  randomize(p, rng);
  const std::size_t b = 2;
  const Tensor f_ana = random_tensor({b, cfg.dim_i}, rng);
  const Tensor f_emb = random_tensor({b, cfg.dim_o}, rng);
  const Tensor weights = random_tensor({b, cfg.dim_o}, rng);
  const auto loss = [&](const FusionParams& q, const Tensor& a, const Tensor& e) {
    return dot(fusion_forward(q, a, e).out.data(), weights.data());
  };
  const FusionForward fw = fusion_forward(p, f_ana, f_emb);
  const FusionGrads g = fusion_backward(p, fw.cache, weights);

  std::vector<double> analytic = flatten(g.grad_params);
  const std::function<double(const FusionParams&)> fp = [&](const FusionParams& q) { return loss(q, f_ana, f_emb); };
  std::vector<double> numeric = finite_diff_params(p, fp);
  const Tensor na = finite_diff_grad([&](const Tensor& a) { return loss(p, a, f_emb); }, f_ana);
  const Tensor ne = finite_diff_grad([&](const Tensor& e) { return loss(p, f_ana, e); }, f_emb);
  analytic.insert(analytic.end(), g.grad_f_ana.data().begin(), g.grad_f_ana.data().end());
  analytic.insert(analytic.end(), g.grad_f_emb.data().begin(), g.grad_f_emb.data().end());
  numeric.insert(numeric.end(), na.data().begin(), na.data().end());
  numeric.insert(numeric.end(), ne.data().begin(), ne.data().end());
  return {"fusion." + std::string(to_string(kind)), relative_error(analytic, numeric)};
}

GradcheckCase check_layer_norm(std::uint64_t seed) {
  RngStream rng(seed, hash_string("gc-ln"));
  const std::size_t n = 7;
  const Tensor x = random_tensor({n}, rng), gamma = random_tensor({n}, rng), beta = random_tensor({n}, rng);
  const Tensor w = random_tensor({n}, rng);
  std::vector<double> y(n);
  const auto loss = [&](const Tensor& in) {
    layer_norm_row(in.data(), gamma.data(), beta.data(), 1e-5, y);
    return dot(y, w.data());
  };
  const LayerNormRow cache = layer_norm_row(x.data(), gamma.data(), beta.data(), 1e-5, y);
  std::vector<double> gx(n), gg(n), gb(n);
  layer_norm_row_backward(cache, gamma.data(), w.data(), gx, gg, gb);
  return {"ops.layer_norm", relative_error(gx, finite_diff_grad(loss, x).values())};
}

GradcheckCase check_conv(std::uint64_t seed) {
  RngStream rng(seed, hash_string("gc-conv"));
  const Tensor x = random_tensor({4, 5}, rng), k = random_tensor({3, 3}, rng), w = random_tensor({4, 5}, rng);
  const double bias = rng.uniform(-1, 1);
  const Conv2dGrads g = conv2d_3x3_backward(x, k, w);
  const Tensor nx = finite_diff_grad([&](const Tensor& v) { return dot(conv2d_3x3(v, k, bias).data(), w.data()); }, x);
  const Tensor nk = finite_diff_grad([&](const Tensor& v) { return dot(conv2d_3x3(x, v, bias).data(), w.data()); }, k);
  std::vector<double> a = g.grad_x.values(), num = nx.values();
  a.insert(a.end(), g.grad_kernel.data().begin(), g.grad_kernel.data().end());
  num.insert(num.end(), nk.data().begin(), nk.data().end());
  return {"ops.conv2d_3x3", relative_error(a, num)};
}

GradcheckCase check_softmax(std::uint64_t seed) {
  RngStream rng(seed, hash_string("gc-softmax"));
  const Tensor x = random_tensor({3, 4}, rng, 2.0), w = random_tensor({3, 4}, rng);
  const Tensor g = softmax_rows_backward(softmax_rows(x), w);
  const Tensor n = finite_diff_grad([&](const Tensor& v) { return dot(softmax_rows(v).data(), w.data()); }, x);
  return {"ops.softmax_rows", relative_error(g, n)};
}

}  // namespace

std::vector<GradcheckCase> run_gradcheck_suite(std::uint64_t seed, std::size_t instances) {
  std::vector<GradcheckCase> out;
  constexpr FusionKind kinds[] = {FusionKind::None, FusionKind::Concat, FusionKind::Sum,
                                  FusionKind::Mlp,  FusionKind::CrossAttention, FusionKind::Afs};
  GrpoConfig ppo;
  ppo.ppo_min = true;
  GrpoConfig k3;
  k3.kl_estimator = KlEstimator::K3;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::uint64_t s = hash_combine(seed, i);
    out.push_back(check_layer_norm(s));
    out.push_back(check_conv(s));
    out.push_back(check_softmax(s));
    out.push_back(check_seq_model(s));
    for (FusionKind k : kinds) out.push_back(check_fusion(s, k));
    out.push_back(check_sgrpo(s, FusionKind::Afs, GrpoConfig{}, "sgrpo.afs"));
    out.push_back(check_sgrpo(s, FusionKind::Concat, GrpoConfig{}, "sgrpo.concat"));
    out.push_back(check_sgrpo(s, FusionKind::Afs, ppo, "sgrpo.ppo_min"));
    out.push_back(check_sgrpo(s, FusionKind::Afs, k3, "sgrpo.k3"));
  }
  return out;
}

}  // namespace agrl
