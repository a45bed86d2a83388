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

#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "agrl/dataset_io.hpp"
#include "agrl/pipeline.hpp"
#include "cli.hpp"

namespace agrl::cli {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "agrl");
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("agrl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Small config shared by the training commands.
  std::string write_small_config() {
    write_text(path("cfg.json"),
               R"({"stage1": {"epochs": 1}, "stage2": {"steps": 3, "groups_per_step": 2, "warmup_steps": 2, "final_window": 2}})");
    return path("cfg.json");
  }

  fs::path dir_;
};

TEST_F(CliTest, HelpAndUsageErrors) {
  const CliRun help = run({"--help"});
  EXPECT_EQ(help.code, kOk);
  EXPECT_NE(help.out.find("train-rl"), std::string::npos);
  EXPECT_EQ(run({}).code, kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kUsage);
  EXPECT_EQ(run({"gen-data"}).code, kUsage);
  EXPECT_EQ(run({"gen-data", "--out", path("d"), "--n", "3"}).code, kUsage);
}

TEST_F(CliTest, BadConfigIsAValidationError) {
  write_text(path("bad.json"), R"({"stage2": {"steps": "many"}})");
  EXPECT_EQ(run({"gen-data", "--out", path("d"), "--config", path("bad.json")}).code, kValidation);
  write_text(path("unknown.json"), R"({"stage3": {}})");
  EXPECT_EQ(run({"gen-data", "--out", path("d"), "--config", path("unknown.json")}).code, kValidation);
  write_text(path("broken.json"), "{");
  EXPECT_EQ(run({"gen-data", "--out", path("d"), "--config", path("broken.json")}).code, kValidation);
}

TEST_F(CliTest, MissingDataDirectoryIsARuntimeError) {
  const CliRun r = run({"train-sft", "--data", path("nope"), "--out", path("s1")});
  EXPECT_EQ(r.code, kRuntime);
  EXPECT_NE(r.err.find("not found"), std::string::npos);
}

TEST_F(CliTest, EndToEnd) {
  const std::string cfg = write_small_config();
  ASSERT_EQ(run({"gen-data", "--out", path("data"), "--n", "20", "--seed", "3"}).code, kOk);
  EXPECT_TRUE(fs::exists(path("data/train.jsonl")));
  EXPECT_EQ(read_split(path("data"), "test").size(), 6u);

  const CliRun sft = run({"train-sft", "--data", path("data"), "--out", path("s1"), "--config", cfg});
  ASSERT_EQ(sft.code, kOk) << sft.err;
  EXPECT_TRUE(fs::exists(path("s1/stage1.ckpt")));

  const CliRun rl = run({"train-rl", "--data", path("data"), "--stage1", path("s1/stage1.ckpt"), "--out", path("s2"),
                      "--config", cfg, "--log-rollouts"});
  ASSERT_EQ(rl.code, kOk) << rl.err;
  EXPECT_EQ(telemetry_from_jsonl(read_text(path("s2/telemetry.jsonl"))).size(), 3u);
  EXPECT_EQ(read_jsonl(path("s2/rollouts.jsonl")).size(), 3u * 2u * 4u);

  const CliRun rl2 = run({"train-rl", "--data", path("data"), "--stage1", path("s1/stage1.ckpt"), "--out", path("s2b"),
                       "--config", cfg});
  ASSERT_EQ(rl2.code, kOk);
  EXPECT_EQ(read_text(path("s2/telemetry.jsonl")), read_text(path("s2b/telemetry.jsonl")));

  const CliRun ev = run({"eval", "--data", path("data"), "--stage1", path("s1/stage1.ckpt"), "--stage2",
                      path("s2/stage2.ckpt"), "--config", cfg});
  ASSERT_EQ(ev.code, kOk) << ev.err;
  const auto rep = nlohmann::json::parse(ev.out);
  EXPECT_EQ(rep["n_samples"], 6);

  write_text(path("ro.jsonl"), R"({"id":"a","scene_id":"scene_0014","query_index":2,"raw_response":"<answer>none</answer><bbox>[]</bbox>"})"
                               "\n");
  const CliRun sc = run({"score", "--rollouts", path("ro.jsonl"), "--data", path("data/test.jsonl")});
  ASSERT_EQ(sc.code, kOk) << sc.err;
  EXPECT_EQ(nlohmann::json::parse(sc.out)["total"], 4.0);

  ASSERT_EQ(run({"plot", "--telemetry", path("s2/telemetry.jsonl"), "--out", path("curve.svg")}).code, kOk);
  EXPECT_EQ(read_text(path("curve.svg")).rfind("<svg", 0), 0u);

  const CliRun ab = run({"ablate", "--data", path("data"), "--stage1", path("s1/stage1.ckpt"), "--out", path("ab.json"),
                      "--config", cfg, "--variants", "none,afs"});
  ASSERT_EQ(ab.code, kOk) << ab.err;
  const auto abj = nlohmann::json::parse(read_text(path("ab.json")));
  EXPECT_TRUE(abj.contains("none"));
  EXPECT_TRUE(abj.contains("afs"));

  EXPECT_EQ(run({"train-rl", "--data", path("data"), "--stage1", path("s1/stage1.ckpt"), "--out", path("s3"),
                 "--config", cfg, "--fusion", "bogus"})
                .code,
            kValidation);
}

TEST_F(CliTest, ScoreRejectsUnknownScene) {
  ASSERT_EQ(run({"gen-data", "--out", path("data"), "--n", "10"}).code, kOk);
  write_text(path("ro.jsonl"), R"({"id":"a","scene_id":"scene_9999","query_index":0,"raw_response":""})"
                               "\n");
  EXPECT_EQ(run({"score", "--rollouts", path("ro.jsonl"), "--data", path("data/test.jsonl")}).code, kValidation);
}

TEST_F(CliTest, GradcheckPasses) {
  const CliRun r = run({"gradcheck", "--instances", "1"});
  EXPECT_EQ(r.code, kOk) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

}  // namespace
}  // namespace agrl::cli
