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

#include "agrl/pipeline.hpp"

#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include "agrl/dataset_io.hpp"
#include "agrl/error.hpp"
#include "agrl/parallel.hpp"
#include "agrl/parser.hpp"
#include "agrl/text_metrics.hpp"

namespace agrl {

using nlohmann::json;

// ---------------------------------------------------------------- config

void RunConfig::validate() const {
  if (n_scenes < 10) throw ConfigError("n_scenes must be at least 10");
  if (encoders.vision_dim == 0 || encoders.text_dim == 0 || encoders.grid == 0)
    throw ConfigError("encoder dimensions must be positive");
  if (stage1.epochs == 0 || stage1.batch_size == 0 || stage1.max_len == 0 || stage1.hidden_dim == 0 ||
      stage1.embed_dim == 0)
    throw ConfigError("stage1 sizes must be positive");
  if (!(stage1.lr > 0.0)) throw ConfigError("stage1.lr must be positive");
  const Stage2Config& s = stage2;
  if (s.groups_per_step == 0) throw ConfigError("stage2.groups_per_step must be positive");
  if (s.group_size < 2) throw ConfigError("stage2.group_size must be at least 2");
  if (s.updates_per_step == 0) throw ConfigError("stage2.updates_per_step must be positive");
  if (s.max_len == 0 || s.hidden_dim == 0 || s.embed_dim == 0 || s.dim_o == 0)
    throw ConfigError("stage2 sizes must be positive");
  if (!(s.lr > 0.0) || !(s.warmup_lr > 0.0)) throw ConfigError("stage2 learning rates must be positive");
  if (!(s.weight_decay >= 0.0)) throw ConfigError("stage2.weight_decay must be nonnegative");
  if (s.warmup_steps > 0 && s.warmup_batch == 0) throw ConfigError("stage2.warmup_batch must be positive");
  if (s.final_window == 0) throw ConfigError("stage2.final_window must be positive");
  s.grpo.validate();
  s.weights.validate();
  afs_config().validate();
  if (eval_split != "train" && eval_split != "val" && eval_split != "test")
    throw ConfigError("eval_split must be train, val or test");
  if (threads == 0) throw ConfigError("threads must be positive");
}

AfsConfig RunConfig::afs_config() const { return {stage1.hidden_dim, stage2.afs_dim, stage2.dim_o, 1e-5}; }

json to_json(const RunConfig& c) {
  const Stage2Config& s = c.stage2;
  return {
      {"seed", c.seed},
      {"dataset_dir", c.dataset_dir},
      {"n_scenes", c.n_scenes},
      {"encoders", {{"vision_dim", c.encoders.vision_dim}, {"text_dim", c.encoders.text_dim}, {"grid", c.encoders.grid}}},
      {"stage1",
       {{"epochs", c.stage1.epochs},
        {"lr", c.stage1.lr},
        {"batch_size", c.stage1.batch_size},
        {"embed_dim", c.stage1.embed_dim},
        {"hidden_dim", c.stage1.hidden_dim},
        {"max_len", c.stage1.max_len}}},
      {"stage2",
       {{"steps", s.steps},
        {"groups_per_step", s.groups_per_step},
        {"group_size", s.group_size},
        {"lr", s.lr},
        {"weight_decay", s.weight_decay},
        {"updates_per_step", s.updates_per_step},
        {"embed_dim", s.embed_dim},
        {"hidden_dim", s.hidden_dim},
        {"max_len", s.max_len},
        {"warmup_steps", s.warmup_steps},
        {"warmup_batch", s.warmup_batch},
        {"warmup_lr", s.warmup_lr},
        {"fusion", std::string(to_string(s.fusion))},
        {"afs_dim", s.afs_dim},
        {"dim_o", s.dim_o},
        {"final_window", s.final_window},
        {"grpo",
         {{"eps_adv", s.grpo.eps_adv},
          {"eps_low", s.grpo.eps_low},
          {"eps_high", s.grpo.eps_high},
          {"beta", s.grpo.beta},
          {"ppo_min", s.grpo.ppo_min},
          {"kl_estimator", s.grpo.kl_estimator == KlEstimator::Exact ? "exact" : "k3"}}},
        {"weights", {{"lambda_f", s.weights.lambda_f}, {"lambda_a", s.weights.lambda_a}, {"lambda_g", s.weights.lambda_g}}}}},
      {"eval_split", c.eval_split},
      {"threads", c.threads}};
}

namespace {

// Overwrites `out` with j[key] when present and rejects keys not in `known`.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }
  json child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? j_.at(key) : json::object();
  }
  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError(where_ + ": unknown key '" + item.key() + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Reader r(j, "config");
  r.get("seed", c.seed);
  r.get("dataset_dir", c.dataset_dir);
  r.get("n_scenes", c.n_scenes);
  r.get("eval_split", c.eval_split);
  r.get("threads", c.threads);
  {
    const json e = r.child("encoders");
    Reader er(e, "config.encoders");
    er.get("vision_dim", c.encoders.vision_dim);
    er.get("text_dim", c.encoders.text_dim);
    er.get("grid", c.encoders.grid);
    er.finish();
  }
  {
    const json s1 = r.child("stage1");
    Reader sr(s1, "config.stage1");
    sr.get("epochs", c.stage1.epochs);
    sr.get("lr", c.stage1.lr);
    sr.get("batch_size", c.stage1.batch_size);
    sr.get("embed_dim", c.stage1.embed_dim);
    sr.get("hidden_dim", c.stage1.hidden_dim);
    sr.get("max_len", c.stage1.max_len);
    sr.finish();
  }
  {
    const json s2 = r.child("stage2");
    Reader sr(s2, "config.stage2");
    Stage2Config& s = c.stage2;
    sr.get("steps", s.steps);
    sr.get("groups_per_step", s.groups_per_step);
    sr.get("group_size", s.group_size);
    sr.get("lr", s.lr);
    sr.get("weight_decay", s.weight_decay);
    sr.get("updates_per_step", s.updates_per_step);
    sr.get("embed_dim", s.embed_dim);
    sr.get("hidden_dim", s.hidden_dim);
    sr.get("max_len", s.max_len);
    sr.get("warmup_steps", s.warmup_steps);
    sr.get("warmup_batch", s.warmup_batch);
    sr.get("warmup_lr", s.warmup_lr);
    std::string fusion(to_string(s.fusion));
    sr.get("fusion", fusion);
    s.fusion = fusion_kind_from_string(fusion);
    sr.get("afs_dim", s.afs_dim);
    sr.get("dim_o", s.dim_o);
    sr.get("final_window", s.final_window);
    {
      const json g = sr.child("grpo");
      Reader gr(g, "config.stage2.grpo");
      gr.get("eps_adv", s.grpo.eps_adv);
      gr.get("eps_low", s.grpo.eps_low);
      gr.get("eps_high", s.grpo.eps_high);
      gr.get("beta", s.grpo.beta);
      gr.get("ppo_min", s.grpo.ppo_min);
      std::string est = "exact";
      gr.get("kl_estimator", est);
      if (est == "exact")
        s.grpo.kl_estimator = KlEstimator::Exact;
      else if (est == "k3")
        s.grpo.kl_estimator = KlEstimator::K3;
      else
        throw ConfigError("config.stage2.grpo.kl_estimator must be 'exact' or 'k3'");
      gr.finish();
    }
    {
      const json w = sr.child("weights");
      Reader wr(w, "config.stage2.weights");
      wr.get("lambda_f", s.weights.lambda_f);
      wr.get("lambda_a", s.weights.lambda_a);
      wr.get("lambda_g", s.weights.lambda_g);
      wr.finish();
    }
    sr.finish();
  }
  r.finish();
  c.validate();
  return c;
}

// ---------------------------------------------------------------- encoders

FrozenEncoders::FrozenEncoders(const EncoderConfig& cfg, std::size_t dim_o)
    : cfg_(cfg),
      scene_(SceneEncoderConfig{cfg.grid, cfg.vision_dim}),
      text_(TextEncoderConfig{cfg.text_dim}),
      projector_(cfg.vision_dim, cfg.text_dim, dim_o) {}

Tensor FrozenEncoders::embed(const Scene& s, std::string_view query_text) const {
  return projector_.project(scene_.features(s), text_.encode(query_text));
}

Tensor FrozenEncoders::analysis_context(const Scene& s) const {
  return concat(scene_.features(s), text_.encode(kAnalysisInstruction));
}

// ---------------------------------------------------------------- stage 1

Stage1Model::Description Stage1Model::describe(const Scene& s, const FrozenEncoders& enc, const Vocab& vocab) const {
  const Tensor ctx = enc.analysis_context(s);
  const SampledSequence seq = greedy_decode(decoder, ctx.data(), max_len, vocab.bos(), vocab.eos());
  return {vocab.detokenize(seq.tokens), Tensor::vector(seq.h_final)};
}

namespace {

SeqModelConfig stage1_model_config(const RunConfig& cfg, const Vocab& vocab, const FrozenEncoders& enc) {
  return {vocab.size(), cfg.stage1.embed_dim, cfg.stage1.hidden_dim, enc.analysis_context_dim(), vocab.bos(), vocab.eos()};
}

template <class P>
void scale(P& p, double s) {
  for (Tensor* t : tensors_of(p))
    for (double& v : t->data()) v *= s;
}

}  // namespace

Stage1Result train_stage1(const RunConfig& cfg, const std::vector<AnnotatedSample>& train) {
  cfg.validate();
  if (train.empty()) throw ValidationError("stage 1: training split is empty");
  const Vocab vocab = Vocab::standard();
  const FrozenEncoders enc(cfg.encoders, cfg.stage2.dim_o);
  RngStream init_rng = RngStream(cfg.seed, hash_string("stage1")).substream("init");

  Stage1Result res;
  res.model.decoder = seq_model_init(stage1_model_config(cfg, vocab, enc), init_rng);
  res.model.encoders = cfg.encoders;
  res.model.max_len = cfg.stage1.max_len;

  std::vector<Tensor> contexts(train.size());
  std::vector<std::vector<TokenId>> targets(train.size());
  parallel_for(train.size(), cfg.threads, [&](std::size_t i) {
    contexts[i] = enc.analysis_context(train[i].scene);
    targets[i] = vocab.encode_text(train[i].analysis_text);
  });

  AdamW<SeqModelParams> opt(res.model.decoder);
  const RngStream order_rng = RngStream(cfg.seed, hash_string("stage1")).substream("order");
  const std::size_t B = cfg.stage1.batch_size;
  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 0; epoch < cfg.stage1.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream shuffle = order_rng.substream(epoch);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle.uniform_int(0, static_cast<std::int64_t>(i - 1)))]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += B) {
      const std::size_t n = std::min(B, order.size() - start);
      std::vector<SftResult> parts(n);
      parallel_for(n, cfg.threads, [&](std::size_t k) {
        const std::size_t idx = order[start + k];
        parts[k] = sft_loss_and_grad(res.model.decoder, contexts[idx].data(), targets[idx], vocab.bos());
      });
      SeqModelParams grads = zeros_like(res.model.decoder);
      for (const SftResult& p : parts) {
        add_into(grads, p.grads);
        epoch_loss += p.loss;
      }
      scale(grads, 1.0 / static_cast<double>(n));
      opt.step(res.model.decoder, grads, cfg.stage1.lr, 0.0, /*ascent=*/false);
    }
    res.epoch_losses.push_back(epoch_loss / static_cast<double>(train.size()));
  }
  return res;
}

// ---------------------------------------------------------------- stage 2

Tensor Stage2Model::context(const Tensor& f_ana, const Tensor& f_emb) const {
  const FusionForward fw = fusion_forward(policy.fusion, f_ana.reshaped({1, f_ana.size()}),
                                          f_emb.reshaped({1, f_emb.size()}));
  return fw.out.reshaped({fw.out.size()});
}

std::string Stage2Model::respond(const Tensor& f_ana, const Tensor& f_emb, const Vocab& vocab) const {
  const Tensor ctx = context(f_ana, f_emb);
  return vocab.detokenize(greedy_decode(policy.decoder, ctx.data(), max_len, policy.bos, policy.eos).tokens);
}

Stage2Model init_stage2(const RunConfig& cfg) {
  cfg.validate();
  const Vocab vocab = Vocab::standard();
  const RngStream root = RngStream(cfg.seed, hash_string("stage2")).substream("init");
  RngStream dec_rng = root.substream("decoder");
  RngStream fusion_rng = root.substream("fusion");
  Stage2Model m;
  m.policy.decoder = seq_model_init(
      {vocab.size(), cfg.stage2.embed_dim, cfg.stage2.hidden_dim, cfg.stage2.dim_o, vocab.bos(), vocab.eos()}, dec_rng);
  m.policy.fusion = fusion_init(cfg.stage2.fusion, cfg.afs_config(), fusion_rng);
  m.policy.bos = vocab.bos();
  m.policy.eos = vocab.eos();
  m.encoders = cfg.encoders;
  m.max_len = cfg.stage2.max_len;
  m.dim_i = cfg.stage1.hidden_dim;
  m.afs_dim = cfg.stage2.afs_dim;
  m.dim_o = cfg.stage2.dim_o;
  return m;
}

json to_json(const StepTelemetry& t) {
  return {{"step", t.step},
          {"mean_reward", t.mean_reward},
          {"mean_r_format", t.mean_r_format},
          {"mean_r_answer", t.mean_r_answer},
          {"mean_r_ground", t.mean_r_ground},
          {"loss", t.loss},
          {"mean_kl", t.mean_kl},
          {"clip_fraction", t.clip_fraction}};
}

std::string telemetry_jsonl(const std::vector<StepTelemetry>& telemetry) {
  std::string out;
  for (const auto& t : telemetry) {
    out += to_json(t).dump();
    out += '\n';
  }
  return out;
}

std::vector<StepTelemetry> telemetry_from_jsonl(const std::string& text) {
  std::vector<StepTelemetry> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    StepTelemetry t;
    t.step = j.at("step").get<std::size_t>();
    t.mean_reward = j.at("mean_reward").get<double>();
    t.mean_r_format = j.at("mean_r_format").get<double>();
    t.mean_r_answer = j.at("mean_r_answer").get<double>();
    t.mean_r_ground = j.at("mean_r_ground").get<double>();
    t.loss = j.at("loss").get<double>();
    t.mean_kl = j.at("mean_kl").get<double>();
    t.clip_fraction = j.at("clip_fraction").get<double>();
    out.push_back(t);
  }
  return out;
}

double Stage2Result::final_mean_reward(std::size_t window) const {
  if (telemetry.empty()) return 0.0;
  const std::size_t n = std::min(window, telemetry.size());
  double s = 0.0;
  for (std::size_t i = telemetry.size() - n; i < telemetry.size(); ++i) s += telemetry[i].mean_reward;
  return s / static_cast<double>(n);
}

namespace {

struct QueryRef {
  std::size_t sample = 0;
  std::size_t query = 0;
};

// Everything about the training queries that stays fixed during stage 2.
struct Stage2Inputs {
  std::vector<QueryRef> queries;
  std::vector<Tensor> f_ana;               // per sample
  std::vector<std::vector<Tensor>> f_emb;  // per sample, per query
};

Stage2Inputs prepare_inputs(const RunConfig& cfg, const Stage1Model& stage1, const std::vector<AnnotatedSample>& data,
                            const Vocab& vocab) {
  const FrozenEncoders enc(cfg.encoders, cfg.stage2.dim_o);
  Stage2Inputs in;
  in.f_ana.resize(data.size());
  in.f_emb.resize(data.size());
  parallel_for(data.size(), cfg.threads, [&](std::size_t i) {
    in.f_ana[i] = stage1.describe(data[i].scene, enc, vocab).f_ana;
    for (const QueryCase& q : data[i].queries) in.f_emb[i].push_back(enc.embed(data[i].scene, q.query_text));
  });
  for (std::size_t i = 0; i < data.size(); ++i)
    for (std::size_t q = 0; q < data[i].queries.size(); ++q) in.queries.push_back({i, q});
  if (in.queries.empty()) throw ValidationError("stage 2: training split has no queries");
  return in;
}

// A well-formed response with a random answer and a matching number of
// random boxes: "none" with no box, one label with one box, or a hand-object
// pair with two.
std::vector<TokenId> random_response(RngStream& rng, const Canvas& canvas, const Vocab& vocab) {
  const auto object = [&] {
    return std::string(kObjectLabels[static_cast<std::size_t>(rng.uniform_int(0, kObjectLabels.size() - 1))]);
  };
  const auto hand = [&] { return std::string(rng.uniform_int(0, 1) == 0 ? "left_hand" : "right_hand"); };
  const auto box = [&] {
    const int w = static_cast<int>(rng.uniform_int(4, canvas.width / 2));
    const int h = static_cast<int>(rng.uniform_int(4, canvas.height / 2));
    const int sx = static_cast<int>(rng.uniform_int(0, canvas.width - w));
    const int sy = static_cast<int>(rng.uniform_int(0, canvas.height - h));
    return BBox{sx, sy, sx + w, sy + h};
  };
  switch (rng.uniform_int(0, 3)) {
    case 0:
      return vocab.encode_response("none", {});
    case 1: {
      const std::string a = object();
      return vocab.encode_response(a, {box()});
    }
    case 2: {
      const std::string a = hand();
      return vocab.encode_response(a, {box()});
    }
    default: {
      const std::string h = hand();
      const std::string o = object();
      const BBox b1 = box();
      const BBox b2 = box();
      return vocab.encode_response(h + " and " + o, {b1, b2});
    }
  }
}

std::vector<double> grammar_warmup(const RunConfig& cfg, Stage2Model& model, const Stage2Inputs& in,
                                   const std::vector<AnnotatedSample>& data, const Vocab& vocab) {
  const Stage2Config& s = cfg.stage2;
  std::vector<double> losses;
  AdamW<SeqModelParams> opt(model.policy.decoder);
  const RngStream root = RngStream(cfg.seed, hash_string("stage2")).substream("warmup");
  for (std::size_t step = 0; step < s.warmup_steps; ++step) {
    const RngStream step_rng = root.substream(step);
    std::vector<SftResult> parts(s.warmup_batch);
    parallel_for(s.warmup_batch, cfg.threads, [&](std::size_t k) {
      RngStream rng = step_rng.substream(k);
      const QueryRef ref =
          in.queries[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(in.queries.size()) - 1))];
      const std::vector<TokenId> target = random_response(rng, data[ref.sample].scene.canvas, vocab);
      const Tensor ctx = model.context(in.f_ana[ref.sample], in.f_emb[ref.sample][ref.query]);
      parts[k] = sft_loss_and_grad(model.policy.decoder, ctx.data(), target, vocab.bos());
    });
    SeqModelParams grads = zeros_like(model.policy.decoder);
    double loss = 0.0;
    for (const SftResult& p : parts) {
      add_into(grads, p.grads);
      loss += p.loss;
    }
    scale(grads, 1.0 / static_cast<double>(s.warmup_batch));
    opt.step(model.policy.decoder, grads, s.warmup_lr, 0.0, /*ascent=*/false);
    losses.push_back(loss / static_cast<double>(s.warmup_batch));
  }
  return losses;
}

}  // namespace

Stage2Result train_stage2(const RunConfig& cfg, const Stage1Model& stage1, const std::vector<AnnotatedSample>& train,
                          const Stage2Options& options) {
  cfg.validate();
  if (train.empty()) throw ValidationError("stage 2: training split is empty");
  if (stage1.decoder.hidden_dim() != cfg.stage1.hidden_dim)
    throw ValidationError("stage 2: stage-1 model width does not match the configured descriptor width");
  const Vocab vocab = Vocab::standard();
  const Stage2Config& s = cfg.stage2;
  const Stage2Inputs in = prepare_inputs(cfg, stage1, train, vocab);

  Stage2Result res;
  res.model = init_stage2(cfg);
  if (!options.skip_warmup) res.warmup_losses = grammar_warmup(cfg, res.model, in, train, vocab);
  if (options.skip_rl) return res;

  ResponsePolicy& current = res.model.policy;
  const ResponsePolicy reference = current;
  PolicyOptimizer opt(current);
  const RngStream root = RngStream(cfg.seed, hash_string("stage2")).substream("rl");
  const std::size_t n_groups = s.groups_per_step, G = s.group_size;

  for (std::size_t step = 0; step < s.steps; ++step) {
    const RngStream step_rng = root.substream(step);
    RngStream pick = step_rng.substream("queries");
    std::vector<QueryRef> refs(n_groups);
    for (auto& r : refs)
      r = in.queries[static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(in.queries.size()) - 1))];

    const ResponsePolicy old = current;
    GroupBatch batch;
    batch.group_size = G;
    batch.groups.resize(n_groups);
    parallel_for(n_groups, cfg.threads, [&](std::size_t k) {
      const AnnotatedSample& sample = train[refs[k].sample];
      const QueryCase& q = sample.queries[refs[k].query];
      RolloutGroup& g = batch.groups[k];
      g.query_id = sample.id + "#" + std::to_string(refs[k].query);
      g.f_ana = in.f_ana[refs[k].sample];
      g.f_emb = in.f_emb[refs[k].sample][refs[k].query];
      const FusionForward fw =
          fusion_forward(old.fusion, g.f_ana.reshaped({1, g.f_ana.size()}), g.f_emb.reshaped({1, g.f_emb.size()}));
      std::vector<double> rewards;
      for (std::size_t i = 0; i < G; ++i) {
        RngStream rng = step_rng.substream(hash_combine(k, i));
        SampledSequence seq = sample_sequence(old.decoder, fw.out.data(), rng, s.max_len, old.bos, old.eos);
        Rollout r;
        r.query_id = g.query_id;
        r.raw_response = vocab.detokenize(seq.tokens);
        r.tokens = std::move(seq.tokens);
        r.old_logprobs = std::move(seq.token_logprobs);
        r.reward = total_reward(parse_response(r.raw_response, sample.scene.canvas), q.gt_answer, q.gt_mask, s.weights);
        rewards.push_back(r.reward.total);
        g.rollouts.push_back(std::move(r));
      }
      g.advantages = group_advantages(rewards, s.grpo.eps_adv);
    });

    StepTelemetry t;
    t.step = step + 1;
    const double n_roll = static_cast<double>(n_groups * G);
    for (const RolloutGroup& g : batch.groups) {
      for (const Rollout& r : g.rollouts) {
        t.mean_reward += r.reward.total / n_roll;
        t.mean_r_format += r.reward.r_format / n_roll;
        t.mean_r_answer += r.reward.r_answer / n_roll;
        t.mean_r_ground += r.reward.r_ground / n_roll;
      }
    }

    try {
      for (std::size_t u = 0; u < s.updates_per_step; ++u) {
        const LossResult loss = sgrpo_loss(batch, current, reference, s.grpo, true, cfg.threads);
        if (!std::isfinite(loss.objective)) throw NumericError("non-finite loss at step " + std::to_string(t.step));
        if (u == 0) {
          t.loss = loss.objective;
          t.mean_kl = loss.mean_kl;
          t.clip_fraction = loss.clip_fraction;
        }
        ResponsePolicy candidate = current;
        update_step(candidate, *loss.grads, opt, s.lr, s.weight_decay);
        if (!all_finite(candidate)) throw NumericError("non-finite parameters after step " + std::to_string(t.step));
        current = std::move(candidate);
      }
    } catch (const NumericError& e) {
      res.aborted = true;
      res.abort_reason = e.what();
      return res;
    }

    if (options.log_rollouts) {
      for (std::size_t k = 0; k < n_groups; ++k) {
        for (std::size_t i = 0; i < G; ++i) {
          const Rollout& r = batch.groups[k].rollouts[i];
          res.rollouts.push_back({t.step, r.query_id + "#" + std::to_string(i), train[refs[k].sample].id,
                                  refs[k].query, r.raw_response, r.reward});
        }
      }
    }
    res.telemetry.push_back(t);
    if (options.on_step) options.on_step(t);
  }
  return res;
}

// ---------------------------------------------------------------- evaluation

json to_json(const EvalReport& r) {
  json by_kind = json::object();
  for (const auto& [k, v] : r.ciou_by_kind) by_kind[k] = v ? json(*v) : json(nullptr);
  return {{"analysis", {{"meteor", r.analysis.meteor}, {"cider", r.analysis.cider}}},
          {"answering", {{"meteor", r.answering.meteor}, {"cider", r.answering.cider}}},
          {"grounding", {{"ciou", r.ciou}, {"ciou_by_kind", by_kind}}},
          {"rewards",
           {{"mean_reward", r.mean_reward},
            {"mean_r_format", r.mean_r_format},
            {"mean_r_answer", r.mean_r_answer},
            {"mean_r_ground", r.mean_r_ground}}},
          {"n_samples", r.n_samples},
          {"n_queries", r.n_queries}};
}

EvalReport score_outputs(const std::vector<AnnotatedSample>& samples, const std::vector<std::string>& analyses,
                         const std::vector<std::string>& responses, const RewardWeights& weights) {
  if (samples.empty()) throw ValidationError("evaluation split is empty");
  if (analyses.size() != samples.size()) throw ValidationError("one analysis per sample is required");
  std::size_t n_queries = 0;
  for (const auto& s : samples) n_queries += s.queries.size();
  if (responses.size() != n_queries) throw ValidationError("one response per query is required");

  EvalReport rep;
  rep.n_samples = samples.size();
  rep.n_queries = n_queries;

  std::vector<Caption> ana_c, ana_r;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    ana_c.push_back(Caption::from_text(analyses[i]));
    ana_r.push_back(Caption::from_text(samples[i].analysis_text));
    rep.analysis.meteor += meteor_exact(ana_c.back(), ana_r.back());
  }
  rep.analysis.meteor /= static_cast<double>(samples.size());
  rep.analysis.cider = CiderScorer(ana_r).mean_score(ana_c, ana_r);

  std::vector<Caption> ans_c, ans_r;
  CumulativeIou overall;
  std::map<std::string, CumulativeIou> by_kind;
  std::size_t idx = 0;
  for (const AnnotatedSample& s : samples) {
    for (const QueryCase& q : s.queries) {
      const ParsedResponse p = parse_response(responses[idx++], s.scene.canvas);
      const RewardBreakdown r = total_reward(p, q.gt_answer, q.gt_mask, weights);
      rep.mean_reward += r.total;
      rep.mean_r_format += r.r_format;
      rep.mean_r_answer += r.r_answer;
      rep.mean_r_ground += r.r_ground;
      ans_c.push_back(Caption::from_text(p.answer_text));
      ans_r.push_back(Caption::from_text(q.gt_answer));
      rep.answering.meteor += meteor_exact(ans_c.back(), ans_r.back());
      const Mask pred = rasterize_boxes(p.boxes, s.scene.canvas);
      overall.add(pred, q.gt_mask);
      by_kind[std::string(to_string(q.kind))].add(pred, q.gt_mask);
    }
  }
  const double nq = static_cast<double>(n_queries);
  rep.mean_reward /= nq;
  rep.mean_r_format /= nq;
  rep.mean_r_answer /= nq;
  rep.mean_r_ground /= nq;
  rep.answering.meteor /= nq;
  rep.answering.cider = CiderScorer(ans_r).mean_score(ans_c, ans_r);
  rep.ciou = overall.defined() ? overall.value() : 0.0;
  for (const auto& [k, acc] : by_kind)
    rep.ciou_by_kind[k] = acc.defined() ? std::optional<double>(acc.value()) : std::nullopt;
  return rep;
}

EvalReport evaluate(const Stage1Model& stage1, const Stage2Model& stage2, const std::vector<AnnotatedSample>& split,
                    const RewardWeights& weights, std::size_t threads) {
  if (split.empty()) throw ValidationError("evaluation split is empty");
  if (!(stage1.encoders == stage2.encoders)) throw ValidationError("stage-1 and stage-2 encoder settings differ");
  const Vocab vocab = Vocab::standard();
  const FrozenEncoders enc(stage2.encoders, stage2.dim_o);
  std::vector<std::string> analyses(split.size());
  std::vector<std::vector<std::string>> per_sample(split.size());
  parallel_for(split.size(), threads, [&](std::size_t i) {
    const Stage1Model::Description d = stage1.describe(split[i].scene, enc, vocab);
    analyses[i] = d.text;
    for (const QueryCase& q : split[i].queries)
      per_sample[i].push_back(stage2.respond(d.f_ana, enc.embed(split[i].scene, q.query_text), vocab));
  });
  std::vector<std::string> responses;
  for (auto& v : per_sample)
    for (auto& r : v) responses.push_back(std::move(r));
  return score_outputs(split, analyses, responses, weights);
}

AblationResult ablation_run(RunConfig cfg, FusionKind variant, const Stage1Model& stage1,
                            const std::vector<AnnotatedSample>& train, const std::vector<AnnotatedSample>& eval_split) {
  cfg.stage2.fusion = variant;
  const Stage2Result r = train_stage2(cfg, stage1, train);
  if (r.aborted) throw NumericError("ablation run '" + std::string(to_string(variant)) + "' aborted: " + r.abort_reason);
  AblationResult out;
  out.variant = variant;
  out.report = evaluate(stage1, r.model, eval_split, cfg.stage2.weights, cfg.threads);
  out.telemetry = r.telemetry;
  out.final_mean_reward = r.final_mean_reward(cfg.stage2.final_window);
  return out;
}

// ---------------------------------------------------------------- checkpoints

namespace {

json encoder_json(const EncoderConfig& e) {
  return {{"vision_dim", e.vision_dim}, {"text_dim", e.text_dim}, {"grid", e.grid}};
}

EncoderConfig encoder_from(const json& j) {
  return {j.at("vision_dim").get<std::size_t>(), j.at("text_dim").get<std::size_t>(), j.at("grid").get<std::size_t>()};
}

json model_json(const SeqModelParams& m) {
  return {{"vocab_size", m.vocab_size()},
          {"embed_dim", m.w_x.dim(0)},
          {"hidden_dim", m.hidden_dim()},
          {"context_dim", m.context_dim()}};
}

SeqModelConfig model_from(const json& j, const Vocab& vocab) {
  SeqModelConfig c{j.at("vocab_size").get<std::size_t>(), j.at("embed_dim").get<std::size_t>(),
                   j.at("hidden_dim").get<std::size_t>(), j.at("context_dim").get<std::size_t>(), vocab.bos(),
                   vocab.eos()};
  if (c.vocab_size != vocab.size()) throw ValidationError("checkpoint: model and vocabulary sizes differ");
  return c;
}

void check_kind(const Checkpoint& ckpt, const char* kind) {
  if (ckpt.kind != kind)
    throw ValidationError("checkpoint kind is '" + ckpt.kind + "', expected '" + std::string(kind) + "'");
}

}  // namespace

Checkpoint to_checkpoint(const Stage1Model& m, const Vocab& vocab) {
  Checkpoint c;
  c.kind = "stage1";
  c.config = {{"model", model_json(m.decoder)}, {"encoders", encoder_json(m.encoders)}, {"max_len", m.max_len}};
  c.vocab = vocab.tokens();
  append_params(c, m.decoder, "decoder.");
  return c;
}

Stage1Model stage1_from_checkpoint(const Checkpoint& ckpt) {
  check_kind(ckpt, "stage1");
  try {
    const Vocab vocab(ckpt.vocab);
    Stage1Model m;
    m.decoder = seq_model_zeros(model_from(ckpt.config.at("model"), vocab));
    m.encoders = encoder_from(ckpt.config.at("encoders"));
    m.max_len = ckpt.config.at("max_len").get<std::size_t>();
    load_params(m.decoder, ckpt, "decoder.");
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("stage1 checkpoint: ") + e.what());
  }
}

Checkpoint to_checkpoint(const Stage2Model& m, const Vocab& vocab) {
  Checkpoint c;
  c.kind = "stage2";
  c.config = {{"model", model_json(m.policy.decoder)},
              {"encoders", encoder_json(m.encoders)},
              {"max_len", m.max_len},
              {"fusion", std::string(to_string(m.fusion_kind()))},
              {"dim_i", m.dim_i},
              {"afs_dim", m.afs_dim},
              {"dim_o", m.dim_o}};
  c.vocab = vocab.tokens();
  append_params(c, m.policy, "");
  return c;
}

Stage2Model stage2_from_checkpoint(const Checkpoint& ckpt) {
  check_kind(ckpt, "stage2");
  try {
    const Vocab vocab(ckpt.vocab);
    Stage2Model m;
    m.encoders = encoder_from(ckpt.config.at("encoders"));
    m.max_len = ckpt.config.at("max_len").get<std::size_t>();
    m.dim_i = ckpt.config.at("dim_i").get<std::size_t>();
    m.afs_dim = ckpt.config.at("afs_dim").get<std::size_t>();
    m.dim_o = ckpt.config.at("dim_o").get<std::size_t>();
    m.policy.decoder = seq_model_zeros(model_from(ckpt.config.at("model"), vocab));
    // Shapes come from a throwaway initialization; values are overwritten.
    RngStream rng(0, 0);
    m.policy.fusion = fusion_init(fusion_kind_from_string(ckpt.config.at("fusion").get<std::string>()),
                                  {m.dim_i, m.afs_dim, m.dim_o, 1e-5}, rng);
    m.policy.bos = vocab.bos();
    m.policy.eos = vocab.eos();
    load_params(m.policy, ckpt, "");
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("stage2 checkpoint: ") + e.what());
  }
}

std::vector<AnnotatedSample> load_split(const RunConfig& cfg, const std::string& split) {
  if (!cfg.dataset_dir.empty()) return read_split(cfg.dataset_dir, split);
  DatasetSplits s = split_dataset(generate_dataset(cfg.seed, cfg.n_scenes));
  if (split == "train") return std::move(s.train);
  if (split == "val") return std::move(s.val);
  if (split == "test") return std::move(s.test);
  throw ConfigError("unknown split '" + split + "'");
}

}  // namespace agrl
