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

// Datasets, answer and plan scoring, batch evaluation and reports.

#ifndef TOOLPLAN_EVALKIT_H_
#define TOOLPLAN_EVALKIT_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "toolplan/agents.h"
#include "toolplan/core_model.h"
#include "toolplan/result.h"

namespace toolplan {

enum class EvalMode {
  kToolOrder,
  kToolOrderPlusSubtasks,
  kPairs,
  kPairsWithDistractors,
  kSaPairs,
  kSqlSimple,
  kSqlNestedDirect,
  kSqlNestedCot,
  kMathCode,
  kEndToEndOA,
  kEndToEndSA,
};

enum class Scorer { kPlan, kAnswer };

struct EvalModeInfo {
  EvalMode mode;
  std::string_view name;         // CLI spelling, e.g. "pairs"
  std::string_view template_id;  // the one template the mode renders
  Scorer scorer;
};

// All modes in declaration order.
const std::vector<EvalModeInfo>& EvalModes();
const EvalModeInfo& EvalModeInfoFor(EvalMode mode);
std::string_view EvalModeName(EvalMode mode);
// Errors: InvalidArgument whose message lists the valid names.
Result<EvalMode> EvalModeFromName(std::string_view name);

// Resolves a dataset argument: an existing file, `path`.jsonl, a directory
// of *.jsonl files, or a bare name under <data>/datasets.
Result<std::vector<std::filesystem::path>> ResolveDatasetPaths(const std::filesystem::path& path);

// JSON Lines, one QARecord per non-blank line. Errors: IoError (missing
// path, naming it), SchemaViolation (line index; subject names the field or
// the duplicated id), UnknownFixtureRef.
Result<std::vector<QARecord>> LoadDataset(const std::filesystem::path& path);

// Lower-cases ASCII, collapses whitespace, drops one pair of surrounding
// quotes and a trailing period.
std::string NormalizeAtom(std::string_view s);

// Total and deterministic. Numbers match when the predicted value,
// truncated or rounded half-to-even to the gold's printed decimals, equals
// the gold; integer golds need |pred - gold| < 1e-9. Sets match as
// multisets of comma/newline separated atoms. Sequences match element-wise
// over newline-separated lines, or else over some split of the comma
// separated atoms into consecutive groups.
bool ScoreAnswer(std::string_view predicted, const AnswerValue& gold);

// What a planning run produced, reduced to what plan scoring looks at.
struct PlanPrediction {
  std::vector<std::string> tools;  // canonical, in order
  std::vector<std::string> subtasks;
  static PlanPrediction FromSteps(const std::vector<PlanStep>& steps);
  static PlanPrediction FromDecisions(const std::vector<PlannerDecision>& decisions);
  std::string ToString() const;
};

// tool-order: tool sequence equals gold_tools. pairs, pairs-distractors,
// sa-pairs: same, and no subtask is blank. dual-lists: also one subtask per
// tool. Answer modes always score false.
bool ScorePlan(const PlanPrediction& predicted, const QARecord& record, EvalMode mode);

// Results fed to sa-pairs planning: the gold answer split per gold tool.
std::vector<std::string> GoldStepResults(const QARecord& record);

// Runs the record's references against the fixture and sandbox, one line
// per gold tool, or only the last result unless the gold is a sequence
// with one item per tool. Errors: the SQL or sandbox error; InvalidArgument when a
// needed reference is missing.
Result<std::string> ReferenceAnswer(const QARecord& record, const Database& db, Sandbox& sandbox);

// Failures of the provider, cassette or sandbox host rather than of the
// model under test.
bool IsInfrastructureError(const Error& error);

struct Verdict {
  std::string id;
  std::string predicted;
  std::string gold;
  bool correct = false;
  int64_t transcript_ref = -1;  // line in the report's transcripts file
  std::optional<std::string> error;
  friend bool operator==(const Verdict&, const Verdict&) = default;
};

struct EvalReport {
  EvalMode mode = EvalMode::kToolOrder;
  std::string model;
  int64_t n = 0;
  int64_t correct = 0;
  std::vector<Verdict> verdicts;       // sorted by id
  std::vector<Transcript> transcripts;  // same order; not part of ToJson()

  double accuracy() const;  // percent
  Json ToJson() const;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// "55%", "33.3%": rounded half-up to one decimal, integer when exact.
std::string FormatAccuracy(int64_t correct, int64_t n);

struct EvalConfig {
  AgentConfig agent;
  std::string model;     // report label; the provider name when empty
  int parallelism = 1;   // forced to 1 for deterministic providers
};

struct EvalEnv {
  CompletionProvider* provider = nullptr;
  const PromptLibrary* prompts = nullptr;
  Sandbox* sandbox = nullptr;
};

// Scores each record under `mode`. Per-record failures score incorrect and
// keep their error; the first infrastructure failure aborts the run.
// Errors: InvalidArgument (no records, missing env), UnknownFixture, and
// infrastructure errors with the record index.
Result<EvalReport> RunEval(EvalMode mode, const std::vector<QARecord>& records,
                           const EvalEnv& env, const EvalConfig& config);

// Model x mode grid, rows sorted by model, then one verdict block per
// report. Errors: InvalidArgument for no reports.
Result<std::string> RenderReport(const std::vector<EvalReport>& reports);
Json ReportsToJson(const std::vector<EvalReport>& reports);

// Writes report.txt, report.json and transcripts-<k>.jsonl for the k-th
// report into `dir`, which must exist.
Status WriteReportFiles(const std::vector<EvalReport>& reports, const std::filesystem::path& dir);

}  // namespace toolplan

#endif  // TOOLPLAN_EVALKIT_H_
