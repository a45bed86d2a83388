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

#include "cli.hpp"

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "agrl/checkpoint.hpp"
#include "agrl/dataset_io.hpp"
#include "agrl/diagnostics.hpp"
#include "agrl/error.hpp"
#include "agrl/pipeline.hpp"
#include "agrl/plot.hpp"

namespace agrl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  int threads = 0;  // 0: keep the config value
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--config", c.config, "RunConfig JSON file")->check(CLI::ExistingFile);
  auto* o = cmd->add_option("--out", c.out, "Output path");
  if (out_required) o->required();
  cmd->add_option("--threads", c.threads, "Worker threads (default: from config)")->check(CLI::Range(0, 1024));
}

RunConfig load_config(const Common& c, const std::string& data_dir = "") {
  RunConfig cfg;
  if (!c.config.empty()) {
    json j;
    try {
      j = json::parse(read_text(c.config));
    } catch (const json::parse_error& e) {
      throw ConfigError(c.config + ": " + e.what());
    }
    cfg = run_config_from_json(j);
  }
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads > 0) cfg.threads = static_cast<std::size_t>(c.threads);
  if (!data_dir.empty()) cfg.dataset_dir = data_dir;
  cfg.validate();
  return cfg;
}

void require_dir(const std::string& dir) {
  if (dir.empty() || !fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir);
}

std::string stage_list(const std::vector<double>& v) {
  std::ostringstream s;
  s << std::setprecision(6);
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
  return s.str();
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Analysis-guided RL for egocentric interaction reasoning and grounding", "agrl"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // gen-data
  Common gen;
  std::size_t n_scenes = 600;
  auto* c_gen = app.add_subcommand("gen-data", "Generate the synthetic dataset as train/val/test JSONL (5:2:3)");
  add_common(c_gen, gen, true);
  c_gen->add_option("--n", n_scenes, "Number of scenes")->check(CLI::Range(10, 1000000));

  // train-sft
  Common sft;
  std::string sft_data;
  auto* c_sft = app.add_subcommand("train-sft", "Stage 1: supervised training of the analysis model");
  add_common(c_sft, sft, true);
  c_sft->add_option("--data", sft_data, "Dataset directory")->required();

  // train-rl
  Common rl;
  std::string rl_data, rl_stage1, rl_fusion;
  bool log_rollouts = false;
  auto* c_rl = app.add_subcommand("train-rl", "Stage 2: grammar warm-up and GRPO training of the response policy");
  add_common(c_rl, rl, true);
  c_rl->add_option("--data", rl_data, "Dataset directory")->required();
  c_rl->add_option("--stage1", rl_stage1, "Stage-1 checkpoint")->required();
  c_rl->add_option("--fusion", rl_fusion, "Fusion variant override");
  c_rl->add_flag("--log-rollouts", log_rollouts, "Also write every sampled rollout");

  // eval
  Common ev;
  std::string ev_data, ev_stage1, ev_stage2, ev_split;
  auto* c_eval = app.add_subcommand("eval", "Greedy evaluation of a stage-1/stage-2 checkpoint pair");
  add_common(c_eval, ev, false);
  c_eval->add_option("--data", ev_data, "Dataset directory")->required();
  c_eval->add_option("--stage1", ev_stage1, "Stage-1 checkpoint")->required();
  c_eval->add_option("--stage2", ev_stage2, "Stage-2 checkpoint")->required();
  c_eval->add_option("--split", ev_split, "train | val | test (default: config eval_split)");

  // score
  Common sc;
  std::string sc_rollouts, sc_data;
  auto* c_score = app.add_subcommand("score", "Score rollout JSONL against a dataset split");
  add_common(c_score, sc, false);
  c_score->add_option("--rollouts", sc_rollouts, "Rollout JSONL")->required()->check(CLI::ExistingFile);
  c_score->add_option("--data", sc_data, "Dataset split JSONL")->required()->check(CLI::ExistingFile);

  // gradcheck
  Common gc;
  std::size_t gc_instances = 3;
  auto* c_gc = app.add_subcommand("gradcheck", "Run every finite-difference gradient suite");
  add_common(c_gc, gc, false);
  c_gc->add_option("--instances", gc_instances, "Random instances per suite")->check(CLI::Range(1, 1000));

  // ablate
  Common ab;
  std::string ab_data, ab_stage1, ab_variants = "none,concat,sum,mlp,cross_attention,afs";
  auto* c_ab = app.add_subcommand("ablate", "Train and evaluate each fusion variant with identical data and seeds");
  add_common(c_ab, ab, true);
  c_ab->add_option("--data", ab_data, "Dataset directory")->required();
  c_ab->add_option("--stage1", ab_stage1, "Stage-1 checkpoint")->required();
  c_ab->add_option("--variants", ab_variants, "Comma-separated fusion variants");

  // plot
  Common pl;
  std::string pl_telemetry, pl_title;
  auto* c_plot = app.add_subcommand("plot", "Render the telemetry reward curve as SVG");
  add_common(c_plot, pl, true);
  c_plot->add_option("--telemetry", pl_telemetry, "Telemetry JSONL")->required()->check(CLI::ExistingFile);
  c_plot->add_option("--title", pl_title, "Plot title");

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  }

  const Vocab vocab = Vocab::standard();
  try {
    if (*c_gen) {
      const RunConfig cfg = load_config(gen);
      const DatasetSplits splits = split_dataset(generate_dataset(cfg.seed, n_scenes));
      write_splits(gen.out, splits);
      out << "wrote " << splits.train.size() << "/" << splits.val.size() << "/" << splits.test.size()
          << " scenes to " << gen.out << "\n";
    } else if (*c_sft) {
      require_dir(sft_data);
      const RunConfig cfg = load_config(sft, sft_data);
      const Stage1Result r = train_stage1(cfg, load_split(cfg, "train"));
      fs::create_directories(sft.out);
      write_checkpoint(fs::path(sft.out) / "stage1.ckpt", to_checkpoint(r.model, vocab));
      std::vector<json> rows;
      for (std::size_t e = 0; e < r.epoch_losses.size(); ++e) rows.push_back({{"epoch", e + 1}, {"loss", r.epoch_losses[e]}});
      write_jsonl(fs::path(sft.out) / "stage1_loss.jsonl", rows);
      write_text(fs::path(sft.out) / "run_config.json", to_json(cfg).dump(2) + "\n");
      out << "epoch losses: " << stage_list(r.epoch_losses) << "\n";
    } else if (*c_rl) {
      require_dir(rl_data);
      RunConfig cfg = load_config(rl, rl_data);
      if (!rl_fusion.empty()) cfg.stage2.fusion = fusion_kind_from_string(rl_fusion);
      const Stage1Model s1 = stage1_from_checkpoint(read_checkpoint(rl_stage1));
      Stage2Options opts;
      opts.log_rollouts = log_rollouts;
      const Stage2Result r = train_stage2(cfg, s1, load_split(cfg, "train"), opts);
      const fs::path dir(rl.out);
      fs::create_directories(dir);
      write_checkpoint(dir / "stage2.ckpt", to_checkpoint(r.model, vocab));
      write_text(dir / "telemetry.jsonl", telemetry_jsonl(r.telemetry));
      write_text(dir / "run_config.json", to_json(cfg).dump(2) + "\n");
      if (log_rollouts) {
        std::vector<json> rows;
        for (const auto& e : r.rollouts)
          rows.push_back({{"step", e.step},
                          {"id", e.id},
                          {"scene_id", e.scene_id},
                          {"query_index", e.query_index},
                          {"raw_response", e.raw_response},
                          {"total", e.reward.total}});
        write_jsonl(dir / "rollouts.jsonl", rows);
      }
      if (r.aborted) {
        err << "training aborted: " << r.abort_reason << " (last good checkpoint written)\n";
        return kRuntime;
      }
      out << "final-window mean reward: " << r.final_mean_reward(cfg.stage2.final_window) << "\n";
    } else if (*c_eval) {
      require_dir(ev_data);
      const RunConfig cfg = load_config(ev, ev_data);
      const std::string split = ev_split.empty() ? cfg.eval_split : ev_split;
      const Stage1Model s1 = stage1_from_checkpoint(read_checkpoint(ev_stage1));
      const Stage2Model s2 = stage2_from_checkpoint(read_checkpoint(ev_stage2));
      const EvalReport rep = evaluate(s1, s2, load_split(cfg, split), cfg.stage2.weights, cfg.threads);
      const std::string text = to_json(rep).dump(2) + "\n";
      if (ev.out.empty())
        out << text;
      else
        write_text(ev.out, text);
    } else if (*c_score) {
      const RunConfig cfg = load_config(sc);
      const auto records = score_rollouts(read_rollouts(sc_rollouts), read_dataset(sc_data), cfg.stage2.weights);
      std::string text;
      for (const auto& r : records) text += to_json(r).dump() + "\n";
      if (sc.out.empty())
        out << text;
      else
        write_text(sc.out, text);
    } else if (*c_gc) {
      const RunConfig cfg = load_config(gc);
      bool ok = true;
      for (const GradcheckCase& c : run_gradcheck_suite(cfg.seed, gc_instances)) {
        out << (c.passed() ? "PASS " : "FAIL ") << c.name << " rel_err=" << std::scientific << std::setprecision(3)
            << c.rel_error << " tol=" << c.tolerance << std::defaultfloat << "\n";
        ok = ok && c.passed();
      }
      return ok ? kOk : kRuntime;
    } else if (*c_ab) {
      require_dir(ab_data);
      const RunConfig cfg = load_config(ab, ab_data);
      std::vector<FusionKind> variants;
      std::stringstream ss(ab_variants);
      for (std::string v; std::getline(ss, v, ',');)
        if (!v.empty()) variants.push_back(fusion_kind_from_string(v));
      if (variants.empty()) throw ConfigError("--variants is empty");
      const Stage1Model s1 = stage1_from_checkpoint(read_checkpoint(ab_stage1));
      const auto train = load_split(cfg, "train");
      const auto eval = load_split(cfg, cfg.eval_split);
      json report = json::object();
      for (FusionKind v : variants) {
        const AblationResult r = ablation_run(cfg, v, s1, train, eval);
        report[std::string(to_string(v))] = {{"final_mean_reward", r.final_mean_reward}, {"eval", to_json(r.report)}};
        out << to_string(v) << ": final mean reward " << r.final_mean_reward << ", cIoU " << r.report.ciou << "\n";
      }
      write_text(ab.out, report.dump(2) + "\n");
    } else if (*c_plot) {
      load_config(pl);
      PlotOptions opts;
      if (!pl_title.empty()) opts.title = pl_title;
      write_text(pl.out, reward_curve_svg(telemetry_from_jsonl(read_text(pl_telemetry)), opts));
    }
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

}  // namespace agrl::cli
