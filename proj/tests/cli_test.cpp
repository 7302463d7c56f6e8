// Copyright 2026 The advbin Authors. All Rights Reserved.
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

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "advbin/cfg.hpp"
#include "advbin/cli.hpp"

namespace advbin {
namespace {

namespace fs = std::filesystem;

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation Cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

json ReadJson(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

void WriteText(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(fs::temp_directory_path() / ("advbin_cli_test_" + std::to_string(::getpid())));
    fs::create_directories(*dir_);
    const auto r = Cli({"gen-corpus", "--functions", "30", "--seed", "5", "--out", Path("corpus.json")});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
  }
  static std::string Path(const std::string& name) { return (*dir_ / name).string(); }

  static std::vector<std::string> SmallAttack(const std::string& command, const std::string& out) {
    return {command, "--corpus", Path("corpus.json"), "--samples", "3", "--iterations", "3",
            "--pool-size", "16", "--k", "4", "--positions", "5", "--strands-tested", "3",
            "--seed", "9", "--out", Path(out)};
  }

  static fs::path* dir_;
};

fs::path* CliTest::dir_ = nullptr;

TEST_F(CliTest, UsageErrorsExitWithOne) {
  EXPECT_EQ(Cli({}).code, 1);
  EXPECT_EQ(Cli({"frobnicate"}).code, 1);
  EXPECT_EQ(Cli({"attack"}).code, 1);
  auto base = SmallAttack("attack", "x.json");
  for (const std::vector<std::string>& extra :
       {std::vector<std::string>{"--only-transform", "XX"}, {"--oracle", "bindiff"}, {"--mode", "sideways"},
        {"--k", "8"}, {"--oracle", "gsize", "--oracle", "ngram"}, {"--epsilon", "2"}}) {
    auto args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = Cli(args);
    EXPECT_EQ(r.code, 1) << extra[0];
    EXPECT_FALSE(r.err.empty());
  }
  auto transfer = SmallAttack("transfer", "t.json");
  EXPECT_EQ(Cli(transfer).code, 1);
}

TEST_F(CliTest, RuntimeErrorsExitWithTwo) {
  // A missing input is caught by argument validation; unreadable content is a runtime failure.
  EXPECT_EQ(Cli({"attack", "--corpus", Path("nope.json"), "--out", Path("x.json")}).code, 1);
  WriteText(Path("broken.json"), R"([{"id": "f", "blocks": 3}])");
  const auto broken = Cli({"attack", "--corpus", Path("broken.json"), "--out", Path("x.json")});
  EXPECT_EQ(broken.code, 2);
  EXPECT_FALSE(broken.err.empty());
  EXPECT_EQ(Cli({"ingest", Path("broken.json"), "--out", Path("y.json")}).code, 2);
}

TEST_F(CliTest, GenCorpusProducesFourVariantsPerGroup) {
  const auto r = Cli({"gen-corpus", "--functions", "250", "--seed", "7", "--out", Path("big.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = ReadJson(Path("big.json"));
  ASSERT_EQ(doc.size(), 1000u);
  std::map<std::string, int> groups;
  for (const auto& f : doc) ++groups[ParseFunction(f).name()];
  EXPECT_EQ(groups.size(), 250u);
  EXPECT_EQ(Cli({"ingest", Path("big.json"), "--out", Path("ingested.json"), "--strict"}).code, 0);
  EXPECT_EQ(ReadJson(Path("ingested.json")).size(), 1000u);
}

TEST_F(CliTest, StrandsBuildThenAttackWithPrebuiltDatabase) {
  ASSERT_EQ(Cli({"strands", "build", "--corpus", Path("corpus.json"), "--out", Path("strands.json")}).code, 0);
  auto args = SmallAttack("attack", "with_db.json");
  args.insert(args.end(), {"--strands", Path("strands.json")});
  const auto r = Cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(ReadJson(Path("with_db.json")).at("manifest").at("strands").at("path"), Path("strands.json"));
}

TEST_F(CliTest, OnlyTransformRestrictsTheTrace) {
  auto args = SmallAttack("attack", "sa.json");
  args.insert(args.end(), {"--only-transform", "SA", "--oracle", "catalog1"});
  ASSERT_EQ(Cli(args).code, 0);
  std::size_t actions = 0;
  const json report = ReadJson(Path("sa.json"));
  for (const auto& s : report.at("body").at("samples")) {
    for (const auto& a : s.at("attack").at("chosen")) {
      EXPECT_EQ(a.at("kind"), "SA");
      ++actions;
    }
  }
  EXPECT_GT(actions, 0u);
}

TEST_F(CliTest, AttackBodiesIgnoreJobCountAndVerify) {
  auto one = SmallAttack("attack", "j1.json");
  one.insert(one.end(), {"--jobs", "1", "--oracle", "ngram"});
  auto three = SmallAttack("attack", "j3.json");
  three.insert(three.end(), {"--jobs", "3", "--oracle", "ngram"});
  ASSERT_EQ(Cli(one).code, 0);
  ASSERT_EQ(Cli(three).code, 0);
  EXPECT_EQ(ReadJson(Path("j1.json")).at("body").dump(), ReadJson(Path("j3.json")).at("body").dump());
  EXPECT_EQ(Cli({"report", "--in", Path("j3.json"), "--verify", "--jobs", "2"}).code, 0);

  json tampered = ReadJson(Path("j1.json"));
  tampered["body"]["metrics"]["wasr"] = 101.0;
  WriteText(Path("tampered.json"), tampered.dump());
  EXPECT_EQ(Cli({"report", "--in", Path("tampered.json")}).code, 0);
  EXPECT_EQ(Cli({"report", "--in", Path("tampered.json"), "--verify"}).code, 2);
}

TEST_F(CliTest, SweepEmitsOneCsvRowPerCell) {
  auto args = SmallAttack("sweep", "grid.csv");
  args.insert(args.end(), {"--k", "8", "--lambda", "0", "--lambda", "0.3", "--json", Path("grid.json")});
  const auto r = Cli(args);
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(Path("grid.csv"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0].rfind("oracle,mode,pool_size,k,lambda", 0), 0u);
  EXPECT_EQ(ReadJson(Path("grid.json")).at("body").at("cells").size(), 4u);
}

TEST_F(CliTest, TransferBodiesIgnoreJobCount) {
  auto transfer = [](const std::string& out, const std::string& jobs) {
    auto args = SmallAttack("transfer", out);
    args[4] = "2";  // --samples
    args[6] = "2";  // --iterations
    args.insert(args.end(), {"--oracle", "gsize", "--oracle", "ngram", "--jobs", jobs});
    return args;
  };
  ASSERT_EQ(Cli(transfer("tr1.json", "1")).code, 0);
  ASSERT_EQ(Cli(transfer("tr2.json", "2")).code, 0);
  const json a = ReadJson(Path("tr1.json")), b = ReadJson(Path("tr2.json"));
  EXPECT_EQ(a.at("body").dump(), b.at("body").dump());
  EXPECT_EQ(a.at("body").at("matrix").size(), 2u);
  EXPECT_EQ(Cli({"report", "--in", Path("tr1.json"), "--verify"}).code, 0);
}

}  // namespace
}  // namespace advbin
