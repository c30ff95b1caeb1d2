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

#include "toolplan/core_model.h"

#include <filesystem>
#include <string>
#include <vector>

#include "gtest/gtest.h"

namespace toolplan {
namespace {

TEST(ToolRegistryTest, DefaultHasTwelveTools) {
  ToolRegistry r = ToolRegistry::Default();
  EXPECT_EQ(r.size(), 12u);
  int executable = 0;
  for (const ToolSpec& s : r.specs()) {
    EXPECT_FALSE(s.description.empty()) << s.name;
    if (s.executable) ++executable;
  }
  EXPECT_EQ(executable, 2);
}

TEST(ToolRegistryTest, SqlGeneratorDescription) {
  ToolRegistry r = ToolRegistry::Default();
  const ToolSpec* sql = r.Find("SQL generator");
  ASSERT_NE(sql, nullptr);
  EXPECT_EQ(sql->name, "sql-generator");
  EXPECT_TRUE(sql->executable);
  EXPECT_EQ(sql->description.rfind("Given an input question and a database, create a "
                                   "syntactically correct SQLite query statement",
                                   0),
            0u);
}

TEST(ToolRegistryTest, MoviePlayerIsNotExecutable) {
  ToolRegistry r = ToolRegistry::Default();
  const ToolSpec* movie = r.Find("Movie player");
  ASSERT_NE(movie, nullptr);
  EXPECT_FALSE(movie->executable);
}

TEST(ToolRegistryTest, CodeAliasesResolveToOneSpec) {
  ToolRegistry r = ToolRegistry::Default();
  const ToolSpec* code = r.Find("code-generator");
  ASSERT_NE(code, nullptr);
  for (const char* alias : {"PythonREPL", "Python REPL", "Python Generator", "Python generator",
                            "pythonrepl", "python生成器"}) {
    EXPECT_EQ(r.Find(alias), code) << alias;
  }
}

TEST(ToolRegistryTest, LookupTotalOverCanonicalNames) {
  ToolRegistry r = ToolRegistry::Default();
  for (const ToolSpec& s : r.specs()) {
    EXPECT_EQ(r.Find(s.name), &s);
    EXPECT_EQ(r.Find(s.display_name), &s);
    EXPECT_EQ(r.Find(ToLower(s.display_name)), &s);
  }
}

TEST(ToolRegistryTest, RejectsDuplicatesAndEmptyDescriptions) {
  ToolRegistry r = ToolRegistry::Default();
  EXPECT_FALSE(r.Add(ToolSpec{"movie-player", "Movie player", "x", false}).ok());
  EXPECT_FALSE(r.Add(ToolSpec{"new-tool", "New tool", "  ", false}).ok());
  EXPECT_TRUE(r.Add(ToolSpec{"new-tool", "New tool", "Does things.", false}).ok());
  EXPECT_EQ(r.size(), 13u);
}

TEST(CanonicalizeToolNameTest, Idempotent) {
  for (const char* raw : {"PythonREPL", "SQL Generator", "  sql生成器 ", "Office Suite",
                          "Unknown Tool", "", "Weather Query Tool"}) {
    std::string once = CanonicalizeToolName(raw);
    EXPECT_EQ(CanonicalizeToolName(once), once) << raw;
  }
  EXPECT_EQ(CanonicalizeToolName("Unknown Tool"), "Unknown Tool");
  EXPECT_EQ(CanonicalizeToolName("SQL生成器"), "sql-generator");
}

TEST(AnswerValueTest, NumberKeepsPrintedPrecision) {
  auto n = AnswerValue::ParseNumber("20.08");
  ASSERT_TRUE(n.ok());
  EXPECT_EQ(n->kind(), AnswerValue::Kind::kNumber);
  EXPECT_EQ(n->number().precision, 2);
  EXPECT_DOUBLE_EQ(n->number().value, 20.08);
  EXPECT_EQ(AnswerValue::FromNumberText("12").number().precision, 0);
  EXPECT_EQ(AnswerValue::FromNumberText("4.8989795").number().precision, 7);
}

TEST(AnswerValueTest, RejectsNonDecimalText) {
  for (const char* s : {"", "abc", "1.", ".5", "1e5", "1,000", "--1", "12 a"}) {
    EXPECT_FALSE(AnswerValue::ParseNumber(s).ok()) << s;
  }
  EXPECT_EQ(AnswerValue::Infer("Jolin Tsai").kind(), AnswerValue::Kind::kText);
  EXPECT_EQ(AnswerValue::Infer("-3.5").kind(), AnswerValue::Kind::kNumber);
}

TEST(AnswerValueTest, JsonRoundTrip) {
  AnswerValue v = AnswerValue::Sequence(
      {AnswerValue::FromNumberText("20.08"),
       AnswerValue::Set({AnswerValue::Text("The Economist: Chinese"),
                         AnswerValue::Text("Reader's Digest: English")})});
  auto back = AnswerValue::FromJson(v.ToJson());
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back, v);
  EXPECT_FALSE(AnswerValue::FromJson(Json{{"number", 3}}).ok());
  EXPECT_FALSE(AnswerValue::FromJson(Json{{"blob", "x"}}).ok());
}

TEST(QARecordTest, MissingGoldAnswerIsSchemaViolation) {
  Json j{{"id", "r1"}, {"fixture", "person-school"}, {"question", "q"}};
  auto r = QARecord::FromJson(j, 7);
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.error().code, ErrorCode::kSchemaViolation);
  EXPECT_EQ(r.error().subject, "gold_answer");
  EXPECT_EQ(r.error().index, 7);
}

TEST(QARecordTest, CanonicalizesGoldTools) {
  Json j{{"id", "r1"},
         {"fixture", "journal-cover"},
         {"question", "q"},
         {"gold_answer", {{"text", "x"}}},
         {"gold_tools", {"PythonREPL", "SQL Generator"}}};
  auto r = QARecord::FromJson(j);
  ASSERT_TRUE(r.ok()) << r.error().ToString();
  EXPECT_EQ(r->gold_tools, (std::vector<std::string>{"code-generator", "sql-generator"}));
  auto again = QARecord::FromJson(r->ToJson());
  ASSERT_TRUE(again.ok());
  EXPECT_EQ(*again, *r);
}

Transcript SampleTranscript() {
  Transcript t("A is the square of 40?");
  TurnRecord planner;
  planner.role = TurnRole::kPlanner;
  planner.prompt = "p\n\"quoted\"";
  planner.completion = "Tool_Query:{\"PythonREPL\": \"x\"}";
  planner.decision = Json{{"kind", "stepwise_query"}, {"tool", "code-generator"}, {"subtask", "x"}};
  planner.wall_time = std::chrono::microseconds(1234);
  t.Append(planner);
  TurnRecord tool;
  tool.role = TurnRole::kTool;
  tool.prompt = "math";
  tool.completion = "def solution():\n    return 40 ** 2";
  tool.result = TurnRecord::Value("1600");
  t.Append(tool);
  TurnRecord failed;
  failed.role = TurnRole::kTool;
  failed.result = TurnRecord::Failure(
      Error(ErrorCode::kToolChainFailure, "sql", "execute")
          .WithCause(Error(ErrorCode::kSqlError, "no such table").WithIndex(2)));
  t.Append(failed);
  EXPECT_TRUE(t.SetFinalAnswer("1600").ok());
  t.Succeed();
  t.set_answer_mode("last-result");
  return t;
}

TEST(TranscriptTest, FinalAnswerSetOnce) {
  Transcript t("q");
  EXPECT_TRUE(t.SetFinalAnswer("a").ok());
  EXPECT_FALSE(t.SetFinalAnswer("b").ok());
  EXPECT_EQ(*t.final_answer(), "a");
}

TEST(TranscriptTest, JsonRoundTrip) {
  Transcript t = SampleTranscript();
  auto back = Transcript::FromJson(Json::parse(t.ToJson().dump()));
  ASSERT_TRUE(back.ok()) << back.error().ToString();
  EXPECT_EQ(*back, t);
  EXPECT_EQ(back->CountRole(TurnRole::kTool), 2u);
}

TEST(TranscriptTest, FailureRoundTrip) {
  Transcript t("q");
  t.Fail(Error(ErrorCode::kStepLimitExceeded, "4 turns"));
  auto back = Transcript::FromJson(t.ToJson());
  ASSERT_TRUE(back.ok());
  EXPECT_EQ(*back, t);
  EXPECT_FALSE(back->outcome().success);
  EXPECT_NE(back->outcome().reason.find("StepLimitExceeded"), std::string::npos);
}

TEST(TranscriptTest, JsonLinesFile) {
  auto path = std::filesystem::path(testing::TempDir()) / "core_model_test.jsonl";
  std::filesystem::remove(path);
  std::vector<Transcript> ts = {SampleTranscript(), Transcript("second")};
  ASSERT_TRUE(AppendTranscripts(path, ts).ok());
  auto back = ReadTranscripts(path);
  ASSERT_TRUE(back.ok()) << back.error().ToString();
  EXPECT_EQ(*back, ts);
}

TEST(TranscriptTest, TruncatedFileIsCorrupt) {
  auto path = std::filesystem::path(testing::TempDir()) / "core_model_truncated.jsonl";
  std::string line = SampleTranscript().ToJson().dump();
  ASSERT_TRUE(WriteFile(path, line + "\n" + line.substr(0, line.size() / 2)).ok());
  auto back = ReadTranscripts(path);
  ASSERT_FALSE(back.ok());
  EXPECT_EQ(back.error().code, ErrorCode::kCorruptTranscript);
  EXPECT_EQ(back.error().index, 2);
}

TEST(ErrorTest, ToStringAndRoot) {
  Error e = Error(ErrorCode::kStepFailure, "step failed").WithIndex(1).WithCause(
      Error(ErrorCode::kUnsupportedTool, "not executable", "movie-player"));
  EXPECT_EQ(e.Root().code, ErrorCode::kUnsupportedTool);
  EXPECT_EQ(e.ToString(),
            "StepFailure#1: step failed <- UnsupportedTool(movie-player): not executable");
  auto back = ErrorFromJson(ErrorToJson(e));
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(*back, e);
}

TEST(FormatDoubleTest, ShortestRoundTrip) {
  EXPECT_EQ(FormatDouble(35.16), "35.16");
  EXPECT_EQ(FormatDouble(1600), "1600");
  EXPECT_EQ(FormatDouble(0.6989700043360187), "0.6989700043360187");
}

}  // namespace
}  // namespace toolplan
