//
// Copyright 2026 The toolplan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "toolplan/cli.h"

#include <cstdlib>
#include <algorithm>
#include <filesystem>
#include <map>
#include <sstream>

#include "gtest/gtest.h"
#include "toolplan/code_sandbox.h"
#include "toolplan/core_model.h"

namespace toolplan {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "toolplan");
  std::ostringstream out, err;
  int code = RunCli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string Cassette(const char* name) { return (DataDir() / "cassettes" / name).string(); }

constexpr char kSaDemo[] =
    "First calculate the square of 40 as A, and find the names of all singers whose total fan "
    "count is less than A.";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cli_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string Path(const std::string& name) const { return (dir_ / name).string(); }
  void RequireSandbox() {
    std::string why;
    if (!SandboxSupported(&why)) GTEST_SKIP() << why;
  }

  fs::path dir_;
};

TEST_F(CliTest, HelpListsEveryFlag) {
  const std::vector<std::string> run_flags = {"--provider", "--cassette",    "--config", "--fixture",
                                              "--max-steps", "--max-retries", "--out",    "--answer-mode",
                                              "--model",    "--force",       "--verbose"};
  std::map<std::string, std::vector<std::string>> expected = {
      {"eval", run_flags},
      {"ask", run_flags},
      {"replay", {"--verify", "--fixture", "--config", "--verbose"}},
      {"tools", {}},
      {"fixtures", {"--out", "--force"}},
      {"record", {"--out", "--force"}},
  };
  expected["eval"].insert(expected["eval"].end(), {"--mode", "--dataset", "--parallelism"});
  expected["ask"].push_back("--agent");
  for (const auto& [cmd, flags] : expected) {
    CliRun r = Cli({cmd, "--help"});
    EXPECT_EQ(r.code, kExitOk) << cmd;
    EXPECT_NE(r.out.find("--help"), std::string::npos) << cmd;
    for (const std::string& flag : flags) {
      EXPECT_NE(r.out.find(flag), std::string::npos) << cmd << " help lacks " << flag;
    }
  }
  CliRun top = Cli({"--help"});
  for (const char* cmd : {"eval", "ask", "replay", "tools", "fixtures", "record"}) {
    EXPECT_NE(top.out.find(cmd), std::string::npos) << cmd;
  }
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Cli({}).code, kExitUsage);
  EXPECT_EQ(Cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(Cli({"eval", "--dataset", "multitool"}).code, kExitUsage);
  CliRun r = Cli({"eval", "--mode", "guess", "--dataset", "multitool"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("tool-order, dual-lists, pairs"), std::string::npos);
  EXPECT_EQ(Cli({"eval", "--mode", "pairs", "--dataset", "multitool", "--out", Path("o")}).code,
            kExitUsage);  // scripted without a cassette
  EXPECT_EQ(Cli({"ask", "q", "--cassette", Cassette("demo-sa.jsonl"), "--max-steps", "zero"}).code,
            kExitUsage);
  EXPECT_EQ(Cli({"ask", "q", "--cassette", Cassette("demo-sa.jsonl"), "--provider", "oracle"}).code,
            kExitUsage);
}

TEST_F(CliTest, EvalPairsIsFourOfFourAndNeverOverwrites) {
  RequireSandbox();
  const std::vector<std::string> args = {"eval",        "--mode",     "pairs",
                                         "--dataset",   "multitool",  "--provider",
                                         "scripted",    "--cassette", Cassette("multitool-pairs.jsonl"),
                                         "--out",       Path("run")};
  CliRun r = Cli(args);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("100% (4/4)"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "run" / "report.json"));
  EXPECT_TRUE(fs::exists(dir_ / "run" / "transcripts-0.jsonl"));
  const std::string before = ReadFile(dir_ / "run" / "report.json").value();

  CliRun again = Cli(args);
  EXPECT_EQ(again.code, kExitUsage);
  EXPECT_NE(again.err.find("--force"), std::string::npos);
  EXPECT_EQ(ReadFile(dir_ / "run" / "report.json").value(), before);

  std::vector<std::string> forced = args;
  forced.push_back("--force");
  EXPECT_EQ(Cli(forced).code, kExitOk);
  EXPECT_EQ(ReadFile(dir_ / "run" / "report.json").value(), before);
}

TEST_F(CliTest, MissingDatasetIsNamed) {
  CliRun r = Cli({"eval", "--mode", "pairs", "--dataset", "/no/such/set", "--cassette",
               Cassette("multitool-pairs.jsonl"), "--out", Path("o")});
  EXPECT_EQ(r.code, kExitInfrastructure);
  EXPECT_NE(r.err.find("/no/such/set"), std::string::npos);
}

TEST_F(CliTest, AskSequentialDemo) {
  RequireSandbox();
  CliRun r = Cli({"ask", kSaDemo, "--agent", "sa", "--cassette", Cassette("demo-sa.jsonl"), "--out", Path("ask")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "Jolin Tsai");
  EXPECT_NE(r.out.find("transcript: " + Path("ask") + "/transcripts.jsonl#0"), std::string::npos);
}

TEST_F(CliTest, AskOneStepTableRow) {
  RequireSandbox();
  CliRun r = Cli({"ask",
               "Calculate the exponential of 3 and list the names and languages of journals with "
               "no cover personality.",
               "--agent", "oa", "--fixture", "journal-cover", "--cassette", Cassette("multitool-oa.jsonl"),
               "--out", Path("ask")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find("\ntranscript:")),
            "20.085536923187668\nThe Economist: Chinese, Reader's Digest: English");
}

TEST_F(CliTest, AskFailureExitsNonzero) {
  RequireSandbox();
  CliRun r = Cli({"ask", "What is 37593 * 67?", "--cassette", Cassette("failures/wrong-tool.jsonl"),
               "--out", Path("ask")});
  EXPECT_EQ(r.code, kExitFailed);
  EXPECT_NE(r.err.find("StepFailure"), std::string::npos);
}

TEST_F(CliTest, UnreachableProviderIsTimeout) {
  ::setenv("TOOLPLAN_TEST_KEY", "k", 1);
  ASSERT_TRUE(WriteFile(dir_ / "config.json",
                        R"({"provider": "http", "http": {"endpoint": "http://127.0.0.1:9",
                            "model": "m", "api_key_env": "TOOLPLAN_TEST_KEY", "max_retries": 0,
                            "connect_timeout_ms": 500}})")
                  .ok());
  CliRun r = Cli({"ask", "anything", "--config", Path("config.json"), "--out", Path("ask")});
  EXPECT_EQ(r.code, kExitInfrastructure);
  EXPECT_NE(r.err.find("Timeout"), std::string::npos) << r.err;
}

TEST_F(CliTest, SettingsResolveFlagEnvConfigDefault) {
  ASSERT_TRUE(WriteFile(dir_ / "config.json", R"({"max_steps": 5, "max_retries": 1, "fixture": "journal-cover"})").ok());
  ::setenv("TOOLPLAN_MAX_RETRIES", "4", 1);
  CliRun r = Cli({"ask", "q", "--config", Path("config.json"), "--max-steps", "3", "--verbose",
               "--cassette", Path("missing.jsonl")});
  ::unsetenv("TOOLPLAN_MAX_RETRIES");
  EXPECT_NE(r.err.find("setting max_steps = 3 (flag)"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("setting max_retries = 4 (env TOOLPLAN_MAX_RETRIES)"), std::string::npos);
  EXPECT_NE(r.err.find("setting fixture = journal-cover (config"), std::string::npos);
  EXPECT_NE(r.err.find("setting provider = scripted (default)"), std::string::npos);
  EXPECT_EQ(r.code, kExitInfrastructure);  // the cassette does not exist
}

TEST_F(CliTest, ReplayPrintsAndVerifies) {
  RequireSandbox();
  ASSERT_TRUE(WriteFile(dir_ / "c.jsonl",
                        "{\"prompt_matcher\": \"*\", \"completion\": \"Tasks:[{\\\"PythonREPL\\\": "
                        "\\\"What is 37593 * 67?\\\"}]\"}\n"
                        "{\"prompt_matcher\": \"*\", \"completion\": \"def solution():\\n  return 37593 * 67\"}\n")
                  .ok());
  CliRun ask = Cli({"ask", "What is 37593 * 67?", "--cassette", Path("c.jsonl"), "--out", Path("ask"),
                 "--answer-mode", "last-result"});
  ASSERT_EQ(ask.code, kExitOk) << ask.err;
  const std::string log = Path("ask") + "/transcripts.jsonl";

  CliRun replay = Cli({"replay", log});
  EXPECT_EQ(replay.code, kExitOk);
  EXPECT_NE(replay.out.find("turn 1 [planner]"), std::string::npos);
  EXPECT_NE(replay.out.find("turn 2 [tool]"), std::string::npos);
  EXPECT_EQ(replay.out.find("turn 3 ["), std::string::npos);
  EXPECT_NE(replay.out.find("final answer: 2518731"), std::string::npos);

  CliRun verify = Cli({"replay", log, "--verify"});
  EXPECT_EQ(verify.code, kExitOk);
  EXPECT_NE(verify.out.find("divergences: 0"), std::string::npos);

  std::string text = ReadFile(log).value();
  const std::string recorded = "\"text\":\"2518731\"";
  text.replace(text.find(recorded), recorded.size(), "\"text\":\"2518732\"");
  ASSERT_TRUE(WriteFile(Path("tampered.jsonl"), text).ok());
  CliRun tampered = Cli({"replay", Path("tampered.jsonl"), "--verify"});
  EXPECT_EQ(tampered.code, kExitFailed);
  EXPECT_NE(tampered.out.find("divergences: 1"), std::string::npos);

  ASSERT_TRUE(WriteFile(Path("truncated.jsonl"), text.substr(0, text.size() / 2)).ok());
  CliRun truncated = Cli({"replay", Path("truncated.jsonl")});
  EXPECT_EQ(truncated.code, kExitInfrastructure);
  EXPECT_NE(truncated.err.find("CorruptTranscript"), std::string::npos);
}

TEST_F(CliTest, RecordThenReplayCassette) {
  RequireSandbox();
  ASSERT_EQ(Cli({"ask", kSaDemo, "--agent", "sa", "--cassette", Cassette("demo-sa.jsonl"), "--out", Path("a")}).code,
            kExitOk);
  CliRun rec = Cli({"record", Path("a") + "/transcripts.jsonl", "--out", Path("rec.jsonl")});
  ASSERT_EQ(rec.code, kExitOk) << rec.err;
  EXPECT_EQ(Cli({"record", Path("a") + "/transcripts.jsonl", "--out", Path("rec.jsonl")}).code, kExitUsage);
  CliRun again = Cli({"ask", kSaDemo, "--agent", "sa", "--cassette", Path("rec.jsonl"), "--out", Path("b")});
  ASSERT_EQ(again.code, kExitOk) << again.err;
  EXPECT_EQ(again.out.substr(0, again.out.find('\n')), "Jolin Tsai");
}

TEST_F(CliTest, ToolsAndFixtures) {
  CliRun tools = Cli({"tools"});
  EXPECT_EQ(tools.code, kExitOk);
  EXPECT_EQ(std::count(tools.out.begin(), tools.out.end(), '\n'), 12);
  CliRun fx = Cli({"fixtures", "--out", Path("fx")});
  ASSERT_EQ(fx.code, kExitOk) << fx.err;
  EXPECT_TRUE(fs::exists(dir_ / "fx" / "journal-cover" / "schema.sql"));
  EXPECT_EQ(Cli({"fixtures", "--out", Path("fx")}).code, kExitUsage);
  EXPECT_EQ(Cli({"fixtures", "--out", Path("fx"), "--force"}).code, kExitOk);
}

}  // namespace
}  // namespace toolplan
