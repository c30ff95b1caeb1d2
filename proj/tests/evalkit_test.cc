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

#include "toolplan/evalkit.h"

#include <algorithm>
#include <random>

#include "gtest/gtest.h"

namespace toolplan {
namespace {

namespace fs = std::filesystem;

AnswerValue Num(const char* t) { return AnswerValue::FromNumberText(t); }
AnswerValue Txt(const char* t) { return AnswerValue::Text(t); }

AnswerValue JournalsWithoutCover() {
  return AnswerValue::Set({Txt("The Economist: Chinese"), Txt("Reader's Digest: English")});
}

SandboxPolicy StubPolicy() {
  SandboxPolicy p;
  p.interpreter_command = {"/bin/sh", (DataDir() / "sandbox" / "stub_interpreter.sh").string()};
  return p;
}

fs::path TempDir() {
  fs::path dir = fs::temp_directory_path() /
                 ("evalkit_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                  "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Answers every request with the same completion; not deterministic so
// that RunEval may use threads.
class ConstantProvider : public CompletionProvider {
 public:
  explicit ConstantProvider(std::string text) : text_(std::move(text)) {}
  Result<Completion> Complete(const CompletionRequest&) override {
    Completion c;
    c.text = text_;
    return c;
  }
  std::string name() const override { return "constant"; }

 private:
  std::string text_;
};

TEST(EvalModeTest, ElevenModesEachBoundToAShippedTemplate) {
  auto prompts = PromptLibrary::Shared().value();
  ASSERT_EQ(EvalModes().size(), 11u);
  for (const EvalModeInfo& info : EvalModes()) {
    EXPECT_NE(prompts->Find(info.template_id), nullptr) << info.name;
    EXPECT_EQ(EvalModeFromName(info.name).value(), info.mode);
    EXPECT_EQ(EvalModeName(info.mode), info.name);
  }
}

TEST(EvalModeTest, UnknownNameListsValidModes) {
  auto r = EvalModeFromName("guess");
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.error().code, ErrorCode::kInvalidArgument);
  EXPECT_NE(r.error().message.find("pairs, pairs-distractors, sa-pairs"), std::string::npos);
}

TEST(LoadDatasetTest, MultitoolHoldsTheFourTableRows) {
  auto records = LoadDataset(DataDir() / "datasets" / "multitool.jsonl");
  ASSERT_TRUE(records.ok()) << records.error().ToString();
  ASSERT_EQ(records->size(), 4u);
  const QARecord& first = (*records)[0];
  EXPECT_EQ(first.question,
            "Calculate the exponential of 3 and list the names and languages of journals with no "
            "cover personality.");
  EXPECT_EQ(first.gold_answer, AnswerValue::Sequence({Num("20.08"), JournalsWithoutCover()}));
  EXPECT_EQ(first.gold_tools, (std::vector<std::string>{"code-generator", "sql-generator"}));
  EXPECT_EQ((*records)[1].gold_answer.items()[0], Num("4"));
  EXPECT_EQ((*records)[2].gold_answer, AnswerValue::Sequence({Num("4.8989795"), Txt("English")}));
  EXPECT_EQ((*records)[3].gold_answer.items()[0], Num("0.69897"));
  EXPECT_EQ((*records)[3].gold_answer.items()[1].items().size(), 4u);
}

TEST(LoadDatasetTest, ResolvesNamesAndDirectories) {
  EXPECT_EQ(LoadDataset("multitool").value().size(), 4u);
  EXPECT_EQ(LoadDataset(DataDir() / "datasets" / "nested_sql").value().size(), 4u);
  auto all = LoadDataset(DataDir() / "datasets");
  ASSERT_TRUE(all.ok()) << all.error().ToString();
  EXPECT_EQ(all->size(), 15u);
}

TEST(LoadDatasetTest, EmptyFileIsEmptyList) {
  fs::path dir = TempDir();
  ASSERT_TRUE(WriteFile(dir / "empty.jsonl", "").ok());
  auto r = LoadDataset(dir / "empty.jsonl");
  ASSERT_TRUE(r.ok());
  EXPECT_TRUE(r->empty());
}

TEST(LoadDatasetTest, MissingGoldAnswerIsSchemaViolation) {
  fs::path dir = TempDir();
  ASSERT_TRUE(WriteFile(dir / "d.jsonl",
                        "\n{\"id\": \"a\", \"fixture\": \"golden-melody\", \"question\": \"q\", "
                        "\"gold_tools\": [\"SQL Generator\"]}\n")
                  .ok());
  auto r = LoadDataset(dir / "d.jsonl");
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.error().code, ErrorCode::kSchemaViolation);
  EXPECT_EQ(r.error().index, 2);
  EXPECT_EQ(r.error().subject, "gold_answer");
}

TEST(LoadDatasetTest, UnknownFixtureAndDuplicates) {
  fs::path dir = TempDir();
  const std::string rec =
      "{\"id\": \"a\", \"fixture\": \"%s\", \"question\": \"q\", \"gold_answer\": {\"text\": "
      "\"x\"}, \"gold_tools\": [\"SQL Generator\"]}\n";
  auto line = [&](const std::string& fixture) {
    std::string s = rec;
    s.replace(s.find("%s"), 2, fixture);
    return s;
  };
  ASSERT_TRUE(WriteFile(dir / "u.jsonl", line("moon-base")).ok());
  EXPECT_EQ(LoadDataset(dir / "u.jsonl").error().code, ErrorCode::kUnknownFixtureRef);
  ASSERT_TRUE(WriteFile(dir / "d.jsonl", line("golden-melody") + line("golden-melody")).ok());
  auto dup = LoadDataset(dir / "d.jsonl");
  EXPECT_EQ(dup.error().code, ErrorCode::kSchemaViolation);
  EXPECT_EQ(dup.error().subject, "a");
  ASSERT_TRUE(WriteFile(dir / "j.jsonl", "{not json\n").ok());
  EXPECT_EQ(LoadDataset(dir / "j.jsonl").error().code, ErrorCode::kSchemaViolation);
}

TEST(LoadDatasetTest, MissingPathIsNamed) {
  auto r = LoadDataset("/nonexistent/where.jsonl");
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.error().code, ErrorCode::kIoError);
  EXPECT_NE(r.error().ToString().find("/nonexistent/where.jsonl"), std::string::npos);
}

// Values frozen from a Python oracle.
TEST(ScoreAnswerTest, PrintedPrecisionExamples) {
  EXPECT_TRUE(ScoreAnswer("20.085536923187668", Num("20.08")));  // exp(3), truncated
  EXPECT_TRUE(ScoreAnswer("4", Num("4")));                       // gcd(24, 212)
  EXPECT_TRUE(ScoreAnswer("4.898979485566356", Num("4.8989795")));  // sqrt(24), rounded
  EXPECT_TRUE(ScoreAnswer("0.6989700043360189", Num("0.69897")));   // log10(5)
  EXPECT_TRUE(ScoreAnswer("0.6989700043360187", Num("0.69897")));   // log(5, 10)
  EXPECT_TRUE(ScoreAnswer("3.565204915932007", Num("3.565204915932007")));  // 24**0.4
  EXPECT_TRUE(ScoreAnswer("2518731", Num("2518731")));
  EXPECT_TRUE(ScoreAnswer("1600.0", Num("1600")));
  EXPECT_TRUE(ScoreAnswer("35.16", Num("35.16")));
  EXPECT_FALSE(ScoreAnswer("20.09", Num("20.08")));
  EXPECT_FALSE(ScoreAnswer("20.07", Num("20.08")));
  EXPECT_FALSE(ScoreAnswer("4.5", Num("4")));
  EXPECT_FALSE(ScoreAnswer("4.8989794", Num("4.8989795")) &&
               ScoreAnswer("4.8989796", Num("4.8989795")));
  EXPECT_FALSE(ScoreAnswer("about 20.08", Num("20.08")));
  EXPECT_FALSE(ScoreAnswer("", Num("0")));
}

TEST(ScoreAnswerTest, RoundHalfEvenAtTheBoundary) {
  EXPECT_FALSE(ScoreAnswer("0.125", Num("0.13")));  // truncates and rounds to 0.12
  EXPECT_TRUE(ScoreAnswer("0.125", Num("0.12")));
  EXPECT_TRUE(ScoreAnswer("0.135", Num("0.14")));
  EXPECT_TRUE(ScoreAnswer("0.1251", Num("0.13")));
  EXPECT_TRUE(ScoreAnswer("-1.54", Num("-1.5")));
  EXPECT_TRUE(ScoreAnswer("0.999", Num("1.00")));
  EXPECT_TRUE(ScoreAnswer("2.5e-3", Num("0.002")));
}

TEST(ScoreAnswerTest, TextAndSets) {
  EXPECT_TRUE(ScoreAnswer("Jolin Tsai", Txt("Jolin Tsai")));
  EXPECT_TRUE(ScoreAnswer("  jolin   TSAI. ", Txt("Jolin Tsai")));
  EXPECT_TRUE(ScoreAnswer("'Jolin Tsai'", Txt("Jolin Tsai")));
  EXPECT_FALSE(ScoreAnswer("Jolin", Txt("Jolin Tsai")));
  const AnswerValue never = AnswerValue::Set({Txt("Jian Cui"), Txt("Jay Chou")});
  EXPECT_TRUE(ScoreAnswer("Jay Chou, Jian Cui", never));
  EXPECT_TRUE(ScoreAnswer("Jian Cui\nJay Chou", never));
  EXPECT_FALSE(ScoreAnswer("Jay Chou", never));
  EXPECT_FALSE(ScoreAnswer("Jay Chou, Jay Chou", never));
  EXPECT_FALSE(ScoreAnswer("Jay Chou, Jian Cui, Penny Tai", never));
  EXPECT_TRUE(ScoreAnswer("Penny Tai: Female", AnswerValue::Set({Txt("Penny Tai: Female")})));
}

TEST(ScoreAnswerTest, Sequences) {
  const AnswerValue gold = AnswerValue::Sequence({Num("20.08"), JournalsWithoutCover()});
  EXPECT_TRUE(ScoreAnswer("20.085536923187668\nThe Economist: Chinese, Reader's Digest: English", gold));
  EXPECT_TRUE(ScoreAnswer("20.085536923187668, Reader's Digest: English, The Economist: Chinese", gold));
  EXPECT_TRUE(ScoreAnswer("20.08, The Economist: Chinese, Reader's Digest: English.", gold));
  EXPECT_FALSE(ScoreAnswer("The Economist: Chinese, Reader's Digest: English, 20.08", gold));
  EXPECT_FALSE(ScoreAnswer("20.08", gold));
  EXPECT_FALSE(ScoreAnswer("20.08, The Economist: Chinese", gold));
  const AnswerValue pair = AnswerValue::Sequence({Num("4.8989795"), Txt("English")});
  EXPECT_TRUE(ScoreAnswer("4.898979485566356, English", pair));
  EXPECT_FALSE(ScoreAnswer("4.898979485566356, French", pair));
}

TEST(ScoreAnswerTest, TotalAndDeterministicOnRandomText) {
  std::mt19937 rng(11);
  const std::vector<AnswerValue> golds = {
      Num("20.08"), Num("4"), Txt("Jolin Tsai"), JournalsWithoutCover(),
      AnswerValue::Sequence({Num("0.69897"), JournalsWithoutCover()}),
      AnswerValue::Sequence({Txt("a"), Txt("b"), Txt("c"), Txt("d")})};
  const std::string alphabet = "0123456789.,-+e \n:'\"abcXYZ";
  for (int i = 0; i < 20000; ++i) {
    std::string s(rng() % 80, ' ');
    for (char& c : s) c = rng() % 4 == 0 ? static_cast<char>(rng() % 256) : alphabet[rng() % alphabet.size()];
    for (const AnswerValue& g : golds) {
      const bool first = ScoreAnswer(s, g);
      EXPECT_EQ(first, ScoreAnswer(s, g));
    }
  }
  // Many atoms against a long sequence stays bounded.
  std::string many;
  for (int i = 0; i < 60; ++i) many += "x, ";
  EXPECT_FALSE(ScoreAnswer(many, AnswerValue::Sequence({Txt("a"), Txt("b"), Txt("c"), Txt("d")})));
}

QARecord Record(std::vector<std::string> tools) {
  QARecord r;
  r.id = "r";
  r.fixture = "journal-cover";
  r.question = "q";
  r.gold_answer = Txt("x");
  r.gold_tools = std::move(tools);
  return r;
}

TEST(ScorePlanTest, CanonicalizedOrderedTools) {
  const QARecord r = Record({"code-generator", "sql-generator"});
  PlanPrediction p = PlanPrediction::FromSteps({{"PythonREPL", "a"}, {"SQL Generator", "b"}});
  EXPECT_TRUE(ScorePlan(p, r, EvalMode::kPairs));
  EXPECT_TRUE(ScorePlan(p, r, EvalMode::kToolOrder));
  PlanPrediction reversed = PlanPrediction::FromSteps({{"SQL Generator", "b"}, {"PythonREPL", "a"}});
  EXPECT_FALSE(ScorePlan(reversed, r, EvalMode::kPairs));
  PlanPrediction blank = PlanPrediction::FromSteps({{"PythonREPL", " "}, {"SQL Generator", "b"}});
  EXPECT_FALSE(ScorePlan(blank, r, EvalMode::kSaPairs));
  EXPECT_FALSE(ScorePlan(p, r, EvalMode::kEndToEndOA));
}

TEST(ScorePlanTest, DualListsNeedEqualArity) {
  const QARecord r = Record({"code-generator", "sql-generator"});
  PlanPrediction mismatch = PlanPrediction::FromDecisions(
      {ToolAndSubtaskLists{{"PythonREPL", "SQL Generator"}, {"only one"}}});
  EXPECT_FALSE(ScorePlan(mismatch, r, EvalMode::kToolOrderPlusSubtasks));
  PlanPrediction ok = PlanPrediction::FromDecisions(
      {ToolAndSubtaskLists{{"PythonREPL", "SQL Generator"}, {"one", "two"}}});
  EXPECT_TRUE(ScorePlan(ok, r, EvalMode::kToolOrderPlusSubtasks));
  PlanPrediction tools_only = PlanPrediction::FromDecisions({ToolList{{"Python Generator", "SQL Generator"}}});
  EXPECT_TRUE(ScorePlan(tools_only, r, EvalMode::kToolOrder));
  EXPECT_FALSE(ScorePlan(tools_only, r, EvalMode::kPairs));
}

TEST(FormatAccuracyTest, IntegerOrOneDecimal) {
  EXPECT_EQ(FormatAccuracy(11, 20), "55%");
  EXPECT_EQ(FormatAccuracy(1, 3), "33.3%");
  EXPECT_EQ(FormatAccuracy(2, 3), "66.7%");
  EXPECT_EQ(FormatAccuracy(0, 4), "0%");
  EXPECT_EQ(FormatAccuracy(4, 4), "100%");
  EXPECT_EQ(FormatAccuracy(1, 8), "12.5%");
}

TEST(GoldStepResultsTest, SplitsPerTool) {
  auto records = LoadDataset("multitool").value();
  EXPECT_EQ(GoldStepResults(records[0]),
            (std::vector<std::string>{"20.08", "The Economist: Chinese, Reader's Digest: English"}));
  auto simple = LoadDataset("simple_sql").value();
  EXPECT_EQ(GoldStepResults(simple[0]), std::vector<std::string>{"35.16"});
}

TEST(InfrastructureErrorTest, Classification) {
  EXPECT_TRUE(IsInfrastructureError(Error(ErrorCode::kScriptExhausted, "x")));
  EXPECT_TRUE(IsInfrastructureError(Error(ErrorCode::kToolChainFailure, "x", "complete")
                                        .WithCause(Error(ErrorCode::kTimeout, "slow"))));
  EXPECT_FALSE(IsInfrastructureError(Error(ErrorCode::kToolChainFailure, "x", "execute")
                                         .WithCause(Error(ErrorCode::kRetriesExhausted, "r")
                                                        .WithCause(Error(ErrorCode::kTimeout, "loop")))));
  EXPECT_TRUE(IsInfrastructureError(Error(ErrorCode::kToolChainFailure, "x", "execute")
                                        .WithCause(Error(ErrorCode::kSandboxSpawnFailure, "no"))));
  EXPECT_FALSE(IsInfrastructureError(Error(ErrorCode::kStepLimitExceeded, "x")));
}

class RunEvalTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::string why;
    if (!SandboxSupported(&why)) GTEST_SKIP() << why;
    prompts_ = PromptLibrary::Shared().value();
  }
  EvalEnv Env(CompletionProvider* p) { return EvalEnv{p, prompts_.get(), &sandbox_}; }

  std::shared_ptr<const PromptLibrary> prompts_;
  Sandbox sandbox_{StubPolicy()};
};

// 20 records against a provider whose SQL always counts 12 men; 11 golds
// say 12.
std::vector<QARecord> TwentyRecords() {
  std::vector<QARecord> out;
  for (int i = 0; i < 20; ++i) {
    QARecord r;
    r.id = "r" + std::string(i < 10 ? "0" : "") + std::to_string(i);
    r.fixture = "person-school";
    r.question = "How many men? (" + std::to_string(i) + ")";
    r.gold_answer = Num(i < 11 ? "12" : "13");
    r.gold_tools = {"sql-generator"};
    out.push_back(r);
  }
  return out;
}

TEST_F(RunEvalTest, ElevenOfTwentyIsFiftyFivePercent) {
  ConstantProvider p("SQLQuery: select count(*) from Person where sex = 'male'");
  auto report = RunEval(EvalMode::kSqlSimple, TwentyRecords(), Env(&p), EvalConfig{});
  ASSERT_TRUE(report.ok()) << report.error().ToString();
  EXPECT_EQ(report->n, 20);
  EXPECT_EQ(report->correct, 11);
  EXPECT_DOUBLE_EQ(report->accuracy(), 55.0);
  EXPECT_EQ(report->ToJson()["accuracy"], "55%");
  EXPECT_EQ(report->model, "constant");
  EXPECT_EQ(report->verdicts[0].predicted, "12");
}

TEST_F(RunEvalTest, PermutationLeavesReportUnchanged) {
  ConstantProvider p("SQLQuery: select count(*) from Person where sex = 'male'");
  std::vector<QARecord> records = TwentyRecords();
  EvalConfig config;
  config.parallelism = 4;
  auto base = RunEval(EvalMode::kSqlSimple, records, Env(&p), config);
  ASSERT_TRUE(base.ok());
  std::mt19937 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(records.begin(), records.end(), rng);
    auto again = RunEval(EvalMode::kSqlSimple, records, Env(&p), config);
    ASSERT_TRUE(again.ok());
    EXPECT_EQ(again->ToJson(), base->ToJson());
    ASSERT_EQ(again->transcripts.size(), base->transcripts.size());
    for (size_t i = 0; i < base->transcripts.size(); ++i) {
      EXPECT_EQ(again->transcripts[i].WithoutTimings(), base->transcripts[i].WithoutTimings());
    }
  }
}

TEST_F(RunEvalTest, EmptyDatasetIsRejected) {
  ConstantProvider p("x");
  EXPECT_EQ(RunEval(EvalMode::kPairs, {}, Env(&p), EvalConfig{}).error().code,
            ErrorCode::kInvalidArgument);
}

TEST_F(RunEvalTest, ExhaustedCassetteAbortsTheRun) {
  ScriptedSession s(std::vector<CassetteEntry>{});
  auto r = RunEval(EvalMode::kPairs, LoadDataset("multitool").value(), Env(&s), EvalConfig{});
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.error().Root().code, ErrorCode::kScriptExhausted);
  EXPECT_EQ(r.error().subject, "multi-1");
}

TEST_F(RunEvalTest, ParseFailuresScoreIncorrect) {
  ConstantProvider p("I cannot plan this.");
  auto r = RunEval(EvalMode::kPairs, LoadDataset("multitool").value(), Env(&p), EvalConfig{});
  ASSERT_TRUE(r.ok()) << r.error().ToString();
  EXPECT_EQ(r->correct, 0);
  ASSERT_TRUE(r->verdicts[0].error.has_value());
  EXPECT_EQ(r->verdicts[0].error->rfind("PlanningParseFailure", 0), 0u);
}

struct CassetteCase {
  const char* cassette;
  EvalMode mode;
  const char* dataset;
  AnswerMode answer_mode;
};

class CassetteEvalTest : public RunEvalTest, public ::testing::WithParamInterface<CassetteCase> {};

TEST_P(CassetteEvalTest, MultitoolSetIsFourOfFour) {
  const CassetteCase& c = GetParam();
  auto session = ScriptedSession::FromFile(DataDir() / "cassettes" / c.cassette);
  ASSERT_TRUE(session.ok()) << session.error().ToString();
  EvalConfig config;
  config.agent.answer_mode = c.answer_mode;
  auto r = RunEval(c.mode, LoadDataset(c.dataset).value(), Env(session->get()), config);
  ASSERT_TRUE(r.ok()) << r.error().ToString();
  for (const Verdict& v : r->verdicts) {
    EXPECT_TRUE(v.correct) << v.id << " predicted " << v.predicted << " " << v.error.value_or("");
  }
  EXPECT_EQ(r->correct, r->n);
  EXPECT_EQ((*session)->cursor(), (*session)->size());
}

INSTANTIATE_TEST_SUITE_P(
    Cassettes, CassetteEvalTest,
    ::testing::Values(
        CassetteCase{"multitool-pairs.jsonl", EvalMode::kPairs, "multitool", AnswerMode::kCollect},
        CassetteCase{"multitool-sa-pairs.jsonl", EvalMode::kSaPairs, "multitool", AnswerMode::kCollect},
        CassetteCase{"multitool-oa.jsonl", EvalMode::kEndToEndOA, "multitool", AnswerMode::kCollect},
        CassetteCase{"multitool-sa.jsonl", EvalMode::kEndToEndSA, "multitool", AnswerMode::kCollect},
        CassetteCase{"demo-sa.jsonl", EvalMode::kEndToEndSA, "demo", AnswerMode::kCollect}));

TEST_F(RunEvalTest, ReplayedCassetteGivesIdenticalReport) {
  std::vector<Json> reports;
  for (int i = 0; i < 2; ++i) {
    auto s = ScriptedSession::FromFile(DataDir() / "cassettes" / "multitool-sa.jsonl").value();
    auto r = RunEval(EvalMode::kEndToEndSA, LoadDataset("multitool").value(), Env(s.get()), EvalConfig{});
    ASSERT_TRUE(r.ok());
    reports.push_back(r->ToJson());
  }
  EXPECT_EQ(reports[0], reports[1]);
}

TEST_F(RunEvalTest, ReferencesReproduceEveryShippedGold) {
  auto records = LoadDataset(DataDir() / "datasets");
  ASSERT_TRUE(records.ok());
  for (const QARecord& r : *records) {
    auto db = LoadFixture(r.fixture).value();
    auto answer = ReferenceAnswer(r, *db, sandbox_);
    ASSERT_TRUE(answer.ok()) << r.id << ": " << answer.error().ToString();
    EXPECT_TRUE(ScoreAnswer(*answer, r.gold_answer)) << r.id << ": " << *answer;
  }
}

TEST(RenderReportTest, GridSortedByModelWithCounts) {
  EvalReport a;
  a.mode = EvalMode::kPairs;
  a.model = "zeta";
  a.n = 20;
  a.correct = 11;
  a.verdicts = {{"r1", "[PythonREPL]", "[PythonREPL]", true, 0, std::nullopt}};
  EvalReport b = a;
  b.model = "alpha";
  b.correct = 20;
  EvalReport c = a;
  c.mode = EvalMode::kToolOrder;
  c.correct = 1;
  c.n = 3;
  auto text = RenderReport({a, b, c});
  ASSERT_TRUE(text.ok());
  EXPECT_LT(text->find("alpha"), text->find("zeta"));
  EXPECT_NE(text->find("55% (11/20)"), std::string::npos);
  EXPECT_NE(text->find("100% (20/20)"), std::string::npos);
  EXPECT_NE(text->find("33.3% (1/3)"), std::string::npos);
  EXPECT_EQ(text->substr(0, text->find('\n')), "Model | tool-order  | pairs");
  EXPECT_FALSE(RenderReport({}).ok());

  auto single = RenderReport({a}).value();
  EXPECT_EQ(single.substr(0, single.find("\n\n")),
            "Model | pairs\n------+------------\nzeta  | 55% (11/20)");
  Json j = ReportsToJson({a});
  EXPECT_EQ(j["reports"][0]["n"], 20);
  EXPECT_EQ(j["reports"][0]["correct"], 11);
  EXPECT_EQ(j["reports"][0]["transcripts"], "transcripts-0.jsonl");
}

TEST_F(RunEvalTest, ReportFilesRoundTrip) {
  auto s = ScriptedSession::FromFile(DataDir() / "cassettes" / "demo-sa.jsonl").value();
  auto r = RunEval(EvalMode::kEndToEndSA, LoadDataset("demo").value(), Env(s.get()), EvalConfig{});
  ASSERT_TRUE(r.ok());
  fs::path dir = TempDir();
  ASSERT_TRUE(WriteReportFiles(std::vector<EvalReport>{*r}, dir).ok());
  auto transcripts = ReadTranscripts(dir / "transcripts-0.jsonl");
  ASSERT_TRUE(transcripts.ok());
  ASSERT_EQ(transcripts->size(), 1u);
  EXPECT_EQ(*(*transcripts)[0].final_answer(), "Jolin Tsai");
  Json j = Json::parse(ReadFile(dir / "report.json").value());
  EXPECT_EQ(j["reports"][0]["accuracy"], "100%");
  EXPECT_TRUE(fs::exists(dir / "report.txt"));
}

}  // namespace
}  // namespace toolplan
