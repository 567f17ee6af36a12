// Copyright 2026 The kgdial Authors
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

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kgdial/checkpoint.hpp"
#include "kgdial/cli.hpp"

namespace kgdial {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(const std::vector<std::string>& args, const std::string& input = {}) {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const std::vector<std::string> kTinyFlags = {
    "--d-model", "16", "--n-heads", "2", "--n-layers", "1", "--d-ff", "32", "--max-positions", "128",
    "--dropout", "0", "--epochs", "1", "--learning-rate", "3e-3", "--max-response-length", "12"};

std::vector<std::string> with_tiny(std::vector<std::string> args) {
  args.insert(args.end(), kTinyFlags.begin(), kTinyFlags.end());
  return args;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("kgdial_cli_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    const Result s = run_cli({"synth", "--out", (root_ / "data").string(), "--n", "40", "--subjects", "2",
                              "--relations", "2"});
    ASSERT_EQ(s.code, 0) << s.err;
    const Result t = run_cli(with_tiny({"train", "--data", (root_ / "data").string(), "--out",
                                        (root_ / "run").string()}));
    ASSERT_EQ(t.code, 0) << t.err;
    spit(root_ / "kg1.json", R"({"triples": [["starbucks", "distance", "4 miles"]]})");
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static std::string path(const std::string& rel) { return (root_ / rel).string(); }
  static fs::path root_;
};
fs::path Cli::root_;

TEST_F(Cli, SynthWritesEightyTenTen) {
  for (const char* split : {"train", "valid", "test"}) {
    ASSERT_TRUE(fs::exists(root_ / "data" / (std::string(split) + ".json"))) << split;
  }
  EXPECT_EQ(json::parse(slurp(root_ / "data/train.json"))["dialogues"].size(), 32u);
  EXPECT_EQ(json::parse(slurp(root_ / "data/valid.json"))["dialogues"].size(), 4u);
  EXPECT_EQ(json::parse(slurp(root_ / "data/test.json"))["dialogues"].size(), 4u);
}

TEST_F(Cli, TrainWritesArtifacts) {
  EXPECT_TRUE(fs::exists(root_ / "run/model.ckpt"));
  EXPECT_TRUE(fs::exists(root_ / "run/vocab.txt"));
  const std::string csv = slurp(root_ / "run/history.csv");
  EXPECT_EQ(csv.rfind("epoch,train_loss,valid_loss\n", 0), 0u);
  const Checkpoint ck = load_checkpoint(root_ / "run/model.ckpt");
  EXPECT_EQ(ck.config.d_model, 16);
  EXPECT_EQ(ck.meta["best_epoch"], 1);
}

TEST_F(Cli, AblationRecordedInCheckpoint) {
  const Result r = run_cli(with_tiny({"train", "--data", path("data"), "--out", path("abl"), "--ablation",
                                      "no-entity-emb,no-kg-mask"}));
  ASSERT_EQ(r.code, 0) << r.err;
  const Checkpoint ck = load_checkpoint(root_ / "abl/model.ckpt");
  EXPECT_TRUE(ck.config.ablation.no_entity_embedding);
  EXPECT_TRUE(ck.config.ablation.no_kg_mask);
  EXPECT_FALSE(ck.config.ablation.no_triple_embedding);
  EXPECT_NE(ck.meta.dump().find("no-kg-mask"), std::string::npos);
}

TEST_F(Cli, MissingFilesAreUsageErrors) {
  EXPECT_EQ(run_cli({"eval", "--ckpt", path("nope.ckpt"), "--data", path("data")}).code, cli::kUsageError);
  EXPECT_EQ(run_cli(with_tiny({"train", "--data", path("nodata"), "--out", path("x")})).code, cli::kUsageError);
  EXPECT_EQ(run_cli({"train"}).code, cli::kUsageError);
  EXPECT_EQ(run_cli({"bogus"}).code, cli::kUsageError);
}

TEST_F(Cli, CorruptCheckpointIsUsageError) {
  spit(root_ / "bad.ckpt", "not a checkpoint\n");
  const Result r = run_cli({"eval", "--ckpt", path("bad.ckpt"), "--data", path("data"), "--vocab",
                            path("run/vocab.txt")});
  EXPECT_EQ(r.code, cli::kUsageError);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, VocabMismatchExitsThree) {
  spit(root_ / "other_vocab.txt", slurp(root_ / "run/vocab.txt") + "zzzextra\n");
  const Result r = run_cli({"eval", "--ckpt", path("run/model.ckpt"), "--data", path("data"), "--vocab",
                            path("other_vocab.txt")});
  EXPECT_EQ(r.code, cli::kVocabMismatch) << r.err;
}

TEST_F(Cli, MalformedVocabIsUsageError) {
  spit(root_ / "short_vocab.txt", "[PAD]\n");
  const Result r = run_cli({"eval", "--ckpt", path("run/model.ckpt"), "--data", path("data"), "--vocab",
                            path("short_vocab.txt")});
  EXPECT_EQ(r.code, cli::kUsageError) << r.err;
}

TEST_F(Cli, HelpListsConfigKeys) {
  const Result r = run_cli({"--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* key : {"learning_rate", "k_entity", "max_history_turns", "temperature", "ablation"}) {
    EXPECT_NE(r.out.find(key), std::string::npos) << key;
  }
}

TEST_F(Cli, UnknownConfigKeyRejected) {
  spit(root_ / "bad.json", R"({"learning_rat": 0.1})");
  const Result r = run_cli({"train", "--data", path("data"), "--out", path("y"), "--config", path("bad.json")});
  EXPECT_EQ(r.code, cli::kUsageError);
  EXPECT_NE(r.err.find("learning_rat"), std::string::npos);
}

TEST_F(Cli, InvalidValueRejected) {
  EXPECT_EQ(run_cli(with_tiny({"train", "--data", path("data"), "--out", path("z"), "--batch-size", "0"})).code,
            cli::kUsageError);
}

TEST_F(Cli, InspectSingleTriple) {
  const Result r = run_cli({"inspect", "--ckpt", path("run/model.ckpt"), "--kg", path("kg1.json"),
                            "--question", "how far is starbucks ?"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["nodes"].size(), 3u);
  ASSERT_EQ(j["relation_weights"].size(), 1u);
  EXPECT_EQ(j["relation_weights"][0]["weight"].get<double>(), 1.0);
  double sum = 0.0;
  for (const auto& e : j["entity_weights"]) sum += e["weight"].get<double>();
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_FALSE(j.contains("mask"));
}

TEST_F(Cli, InspectDumpMask) {
  const Result r = run_cli({"inspect", "--ckpt", path("run/model.ckpt"), "--kg", path("kg1.json"),
                            "--question", "how far is starbucks ?", "--dump-mask"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  ASSERT_TRUE(j.contains("mask"));
  EXPECT_EQ(j["mask"]["triples"].size(), 1u);
  EXPECT_TRUE(j["mask"]["triples"][0]["selected"].get<bool>());
}

TEST_F(Cli, EvalGoldIsPerfectAndRepeatable) {
  const Result a = run_cli({"eval", "--ckpt", path("run/model.ckpt"), "--data", path("data"), "--hyp-from-gold",
                            "--report", path("gold.json")});
  ASSERT_EQ(a.code, 0) << a.err;
  const json j = json::parse(slurp(root_ / "gold.json"));
  EXPECT_EQ(j["metrics"]["bleu"].get<double>(), 100.0);
  EXPECT_EQ(j["metrics"]["entity_f1"].get<double>(), 100.0);

  ASSERT_EQ(run_cli({"eval", "--ckpt", path("run/model.ckpt"), "--data", path("data"), "--report",
                     path("r1.json")}).code, 0);
  ASSERT_EQ(run_cli({"eval", "--ckpt", path("run/model.ckpt"), "--data", path("data"), "--report",
                     path("r2.json")}).code, 0);
  EXPECT_EQ(slurp(root_ / "r1.json"), slurp(root_ / "r2.json"));
}

TEST_F(Cli, EvalGridWritesEveryPair) {
  const Result r = run_cli({"eval", "--ckpt", path("run/model.ckpt"), "--data", path("data"), "--grid",
                            "--grid-values", "1,all", "--report", path("grid.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* name : {"grid_e1_r1.json", "grid_e1_rall.json", "grid_eall_r1.json", "grid_eall_rall.json"}) {
    EXPECT_TRUE(fs::exists(root_ / name)) << name;
  }
  EXPECT_NE(r.out.find("all"), std::string::npos);
}

TEST_F(Cli, ChatQuitAndDeterminism) {
  const std::vector<std::string> args = {"chat", "--ckpt", path("run/model.ckpt"), "--kg", path("kg1.json")};
  const std::string script = "what is the distance of starbucks ?\n/reset\n/seed 5\nhello\n/quit\nnever read\n";
  const Result a = run_cli(args, script);
  const Result b = run_cli(args, script);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NE(a.out.find("(history cleared)"), std::string::npos);
  EXPECT_NE(a.out.find("(seed 5)"), std::string::npos);
  EXPECT_EQ(a.out.find("never read"), std::string::npos);
}

TEST_F(Cli, EnvironmentConfigApplies) {
  spit(root_ / "env.json", R"({"k_entity": 1, "k_relation": "all"})");
  ::setenv("KGDIAL_CONFIG", path("env.json").c_str(), 1);
  const Result r = run_cli({"inspect", "--ckpt", path("run/model.ckpt"), "--kg", path("kg1.json"),
                            "--question", "starbucks ?"});
  ::unsetenv("KGDIAL_CONFIG");
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["k_entity"], "1");
  EXPECT_EQ(j["k_relation"], "all");
  EXPECT_EQ(j["selected_entities"].size(), 1u);
}

}  // namespace
}  // namespace kgdial
