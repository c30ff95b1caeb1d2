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
#include <atomic>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "toolplan/prompt_engine.h"
#include "toolplan/response_parsers.h"
#include "toolplan/toolbox.h"

namespace toolplan {
namespace {

constexpr size_t kMaxAtoms = 64;
constexpr uint64_t kMaxPartitions = 200000;

const std::vector<EvalModeInfo> kModes = {
    {EvalMode::kToolOrder, "tool-order", "tool-order", Scorer::kPlan},
    {EvalMode::kToolOrderPlusSubtasks, "dual-lists", "tool-order-plus-subtasks", Scorer::kPlan},
    {EvalMode::kPairs, "pairs", "paired-oa", Scorer::kPlan},
    {EvalMode::kPairsWithDistractors, "pairs-distractors", "paired-oa-distractors", Scorer::kPlan},
    {EvalMode::kSaPairs, "sa-pairs", "paired-sa", Scorer::kPlan},
    {EvalMode::kSqlSimple, "sql-simple", "sql-simple", Scorer::kAnswer},
    {EvalMode::kSqlNestedDirect, "sql-nested-direct", "sql-nested-direct", Scorer::kAnswer},
    {EvalMode::kSqlNestedCot, "sql-nested-cot", "sql-nested-cot", Scorer::kAnswer},
    {EvalMode::kMathCode, "math-code", "math-solution", Scorer::kAnswer},
    {EvalMode::kEndToEndOA, "end-to-end-oa", "agent-onestep", Scorer::kAnswer},
    {EvalMode::kEndToEndSA, "end-to-end-sa", "paired-sa", Scorer::kAnswer},
};

std::vector<std::string> SplitAny(std::string_view s, std::string_view seps) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || seps.find(s[i]) != std::string_view::npos) {
      std::string piece = Trim(s.substr(start, i - start));
      if (!piece.empty()) out.push_back(std::move(piece));
      start = i + 1;
    }
  }
  return out;
}

std::string Join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

// Digits of `v` in plain positional notation: "-", integer and fraction.
struct Decimal {
  bool negative = false;
  std::string integer;
  std::string fraction;
};

std::optional<Decimal> ParsePlainDecimal(std::string_view t) {
  Decimal d;
  size_t i = 0;
  if (i < t.size() && (t[i] == '-' || t[i] == '+')) d.negative = t[i++] == '-';
  size_t b = i;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
  d.integer = std::string(t.substr(b, i - b));
  if (i < t.size() && t[i] == '.') {
    b = ++i;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    d.fraction = std::string(t.substr(b, i - b));
  }
  if (i != t.size() || (d.integer.empty() && d.fraction.empty())) return std::nullopt;
  if (d.integer.empty()) d.integer = "0";
  return d;
}

std::optional<double> ParseFinite(std::string_view t) {
  if (!t.empty() && t[0] == '+') t.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Adds one unit in the last place of a digit string.
std::string Increment(std::string digits) {
  for (size_t i = digits.size(); i-- > 0;) {
    if (digits[i] != '9') {
      ++digits[i];
      return digits;
    }
    digits[i] = '0';
  }
  return "1" + digits;
}

bool NumberMatches(std::string_view predicted, const AnswerValue::Number& gold) {
  const std::string atom = NormalizeAtom(predicted);
  std::optional<double> value = ParseFinite(atom);
  if (!value) return false;
  const int p = gold.precision;
  if (p == 0) return std::fabs(*value - gold.value) < 1e-9;

  std::optional<Decimal> d = ParsePlainDecimal(atom);
  if (!d) {
    char buf[512];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), *value, std::chars_format::fixed);
    if (ec != std::errc()) return false;
    d = ParsePlainDecimal(std::string_view(buf, end - buf));
    if (!d) return false;
  }
  std::string frac = d->fraction;
  frac.resize(std::max<size_t>(frac.size(), p + 1), '0');
  const std::string kept = d->integer + frac.substr(0, p);
  const std::string rest = frac.substr(p);

  bool up = false;
  if (rest[0] > '5') {
    up = true;
  } else if (rest[0] == '5') {
    const bool tail = rest.find_first_not_of('0', 1) != std::string::npos;
    up = tail || ((kept.back() - '0') % 2 == 1);
  }
  const double unit = std::pow(10.0, -p);
  auto as_value = [&](const std::string& digits) {
    const std::string text = digits.substr(0, digits.size() - p) + "." + digits.substr(digits.size() - p);
    double v = *ParseFinite(text);
    return d->negative ? -v : v;
  };
  if (std::fabs(as_value(kept) - gold.value) < unit / 2) return true;
  return up && std::fabs(as_value(Increment(kept)) - gold.value) < unit / 2;
}

bool MatchElement(std::string_view text, const AnswerValue& gold);

// Perfect matching between atoms and gold items (augmenting paths).
bool MatchMultiset(const std::vector<std::string>& atoms, const std::vector<AnswerValue>& items) {
  if (atoms.size() != items.size()) return false;
  const size_t n = atoms.size();
  std::vector<std::vector<bool>> ok(n, std::vector<bool>(n));
  for (size_t a = 0; a < n; ++a) {
    for (size_t g = 0; g < n; ++g) ok[a][g] = MatchElement(atoms[a], items[g]);
  }
  std::vector<int> owner(n, -1);
  for (size_t a = 0; a < n; ++a) {
    std::vector<bool> seen(n);
    std::function<bool(size_t)> augment = [&](size_t x) {
      for (size_t g = 0; g < n; ++g) {
        if (!ok[x][g] || seen[g]) continue;
        seen[g] = true;
        if (owner[g] < 0 || augment(owner[g])) {
          owner[g] = static_cast<int>(x);
          return true;
        }
      }
      return false;
    };
    if (!augment(a)) return false;
  }
  return true;
}

bool ScoreSet(std::string_view predicted, const AnswerValue& gold) {
  std::vector<std::string> atoms = SplitAny(predicted, ",\n");
  if (atoms.size() > kMaxAtoms) return false;
  return MatchMultiset(atoms, gold.items());
}

bool MatchAll(const std::vector<std::string>& parts, const std::vector<AnswerValue>& items) {
  if (parts.size() != items.size()) return false;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (!MatchElement(parts[i], items[i])) return false;
  }
  return true;
}

bool ScoreSequence(std::string_view predicted, const AnswerValue& gold) {
  const std::vector<AnswerValue>& items = gold.items();
  if (items.empty()) return Trim(predicted).empty();
  if (MatchAll(SplitAny(predicted, "\n"), items)) return true;

  const std::vector<std::string> atoms = SplitAny(predicted, ",\n");
  const size_t n = atoms.size();
  const size_t k = items.size();
  if (n < k || n > kMaxAtoms) return false;
  // cuts[j] is where group j+1 starts; enumerate in lexicographic order.
  std::vector<size_t> cuts(k - 1);
  for (size_t j = 0; j + 1 < k; ++j) cuts[j] = j + 1;
  for (uint64_t tried = 0; tried < kMaxPartitions; ++tried) {
    std::vector<std::string> groups;
    size_t begin = 0;
    for (size_t j = 0; j <= cuts.size(); ++j) {
      const size_t end = j < cuts.size() ? cuts[j] : n;
      groups.push_back(Join(std::vector<std::string>(atoms.begin() + begin, atoms.begin() + end), ", "));
      begin = end;
    }
    if (MatchAll(groups, items)) return true;
    // Next combination of k-1 cut points from 1..n-1.
    size_t j = cuts.size();
    while (j > 0 && cuts[j - 1] == n - (cuts.size() - (j - 1))) --j;
    if (j == 0) return false;
    ++cuts[j - 1];
    for (size_t m = j; m < cuts.size(); ++m) cuts[m] = cuts[m - 1] + 1;
  }
  return false;
}

bool MatchElement(std::string_view text, const AnswerValue& gold) {
  switch (gold.kind()) {
    case AnswerValue::Kind::kNumber:
      return NumberMatches(text, gold.number());
    case AnswerValue::Kind::kText: {
      const std::string atom = NormalizeAtom(text);
      return !atom.empty() && atom == NormalizeAtom(gold.text());
    }
    case AnswerValue::Kind::kSet:
      return ScoreSet(text, gold);
    case AnswerValue::Kind::kSequence:
      return ScoreSequence(text, gold);
  }
  return false;
}

// Plain text of a gold value: sets and sequences joined by ", ".
std::string PlainText(const AnswerValue& v) {
  if (v.kind() == AnswerValue::Kind::kNumber || v.kind() == AnswerValue::Kind::kText) {
    return v.ToString();
  }
  std::vector<std::string> parts;
  for (const AnswerValue& item : v.items()) parts.push_back(PlainText(item));
  return Join(parts, ", ");
}

bool IsPlanMode(EvalMode mode) { return EvalModeInfoFor(mode).scorer == Scorer::kPlan; }

PlanMode ToPlanMode(EvalMode mode) {
  switch (mode) {
    case EvalMode::kToolOrder:
      return PlanMode::kToolOrder;
    case EvalMode::kToolOrderPlusSubtasks:
      return PlanMode::kDualLists;
    case EvalMode::kPairsWithDistractors:
      return PlanMode::kPairsWithDistractors;
    case EvalMode::kSaPairs:
      return PlanMode::kSaPairs;
    default:
      return PlanMode::kPairs;
  }
}

std::string GoldToolsText(const QARecord& r) {
  std::vector<std::string> names;
  for (const std::string& t : r.gold_tools) names.push_back(SurfaceToolName(t));
  return "[" + Join(names, ", ") + "]";
}

class FixtureCache {
 public:
  Result<const Database*> Get(const std::string& id) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = dbs_.find(id);
    if (it == dbs_.end()) {
      TOOLPLAN_ASSIGN_OR_RETURN(std::shared_ptr<Database> db, LoadFixture(id));
      it = dbs_.emplace(id, std::move(db)).first;
    }
    return static_cast<const Database*>(it->second.get());
  }

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Database>> dbs_;
};

struct RecordOutcome {
  Verdict verdict;
  Transcript transcript;
};

// An error return means the run must abort.
Result<RecordOutcome> EvaluateRecord(EvalMode mode, const QARecord& record, const EvalEnv& env,
                                     const EvalConfig& config, FixtureCache& fixtures) {
  TOOLPLAN_ASSIGN_OR_RETURN(const Database* db, fixtures.Get(record.fixture));
  const EvalModeInfo& info = EvalModeInfoFor(mode);
  AgentEnv agent_env{env.provider, env.prompts, db, env.sandbox};
  AgentConfig agent = config.agent;

  RecordOutcome out;
  out.verdict.id = record.id;
  std::optional<Error> failure;

  if (IsPlanMode(mode)) {
    out.verdict.gold = GoldToolsText(record);
    AgentRun run = PlanOnly(record.question, ToPlanMode(mode), agent_env, agent,
                            GoldStepResults(record));
    if (!run.ok()) failure = run.status.error();
    PlanPrediction plan = PlanPrediction::FromDecisions(run.decisions);
    out.verdict.predicted = plan.ToString();
    out.verdict.correct = run.ok() && ScorePlan(plan, record, mode);
    out.transcript = std::move(run.transcript);
  } else {
    out.verdict.gold = record.gold_answer.ToString();
    if (mode == EvalMode::kEndToEndOA || mode == EvalMode::kEndToEndSA) {
      agent.onestep_template = std::string(info.template_id);
      AgentRun run = mode == EvalMode::kEndToEndOA
                         ? RunOneStep(record.question, agent_env, agent)
                         : RunSequential(record.question, agent_env, agent,
                                         SequentialGrammar::kStepwise);
      if (!run.ok()) failure = run.status.error();
      out.transcript = std::move(run.transcript);
    } else {
      ToolboxConfig tc = agent.toolbox;
      PlanStep step{std::string(kSqlGenerator), record.question};
      if (mode == EvalMode::kMathCode) {
        step.tool = std::string(kCodeGenerator);
      } else {
        tc.sql_variant = mode == EvalMode::kSqlSimple       ? SqlVariant::kSimple
                         : mode == EvalMode::kSqlNestedDirect ? SqlVariant::kNestedDirect
                                                              : SqlVariant::kNestedCot;
      }
      out.transcript = Transcript(record.question);
      out.transcript.set_answer_mode("tool-result");
      Toolbox toolbox(ToolContext{env.provider, env.prompts, db, env.sandbox, &out.transcript}, tc);
      auto result = toolbox.Invoke(step, "");
      if (result.ok()) {
        (void)out.transcript.SetFinalAnswer(result->text);
        out.transcript.Succeed();
      } else {
        failure = result.error();
        out.transcript.Fail(*failure);
      }
    }
    if (out.transcript.final_answer()) out.verdict.predicted = *out.transcript.final_answer();
    out.verdict.correct = !failure && ScoreAnswer(out.verdict.predicted, record.gold_answer);
  }
  if (failure) {
    if (IsInfrastructureError(*failure)) return *failure;
    out.verdict.error = failure->ToString();
  }
  return out;
}

}  // namespace

const std::vector<EvalModeInfo>& EvalModes() { return kModes; }

const EvalModeInfo& EvalModeInfoFor(EvalMode mode) {
  for (const EvalModeInfo& info : kModes) {
    if (info.mode == mode) return info;
  }
  return kModes.front();
}

std::string_view EvalModeName(EvalMode mode) { return EvalModeInfoFor(mode).name; }

Result<EvalMode> EvalModeFromName(std::string_view name) {
  std::vector<std::string> names;
  for (const EvalModeInfo& info : kModes) {
    if (info.name == name) return info.mode;
    names.emplace_back(info.name);
  }
  return Error(ErrorCode::kInvalidArgument, "unknown mode; valid modes: " + Join(names, ", "),
               std::string(name));
}

Result<std::vector<std::filesystem::path>> ResolveDatasetPaths(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  auto from_dir = [](const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
  };
  std::vector<fs::path> candidates = {path, fs::path(path.string() + ".jsonl")};
  if (path.is_relative() && !path.has_parent_path()) {
    candidates.push_back(DataDir() / "datasets" / path);
    candidates.push_back(DataDir() / "datasets" / (path.string() + ".jsonl"));
  }
  for (const fs::path& c : candidates) {
    if (fs::is_directory(c, ec)) return from_dir(c);
    if (fs::is_regular_file(c, ec)) return std::vector<fs::path>{c};
  }
  return Error(ErrorCode::kIoError, "dataset not found", path.string());
}

Result<std::vector<QARecord>> LoadDataset(const std::filesystem::path& path) {
  TOOLPLAN_ASSIGN_OR_RETURN(std::vector<std::filesystem::path> files, ResolveDatasetPaths(path));
  const std::vector<std::string> fixtures = KnownFixtureIds();
  std::vector<QARecord> records;
  std::map<std::string, std::string> seen;  // id -> file
  for (const auto& file : files) {
    TOOLPLAN_ASSIGN_OR_RETURN(std::string text, ReadFile(file));
    int64_t line_no = 0;
    size_t start = 0;
    while (start < text.size()) {
      size_t end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      std::string_view line(text.data() + start, end - start);
      start = end + 1;
      ++line_no;
      if (Trim(line).empty()) continue;
      Json j = Json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        return Error(ErrorCode::kSchemaViolation, "line is not JSON: " + file.string(), "line")
            .WithIndex(line_no);
      }
      auto record = QARecord::FromJson(j, line_no);
      if (!record.ok()) return record.take_error();
      if (std::find(fixtures.begin(), fixtures.end(), record->fixture) == fixtures.end()) {
        return Error(ErrorCode::kUnknownFixtureRef, "record " + record->id + " names an unknown fixture",
                     record->fixture)
            .WithIndex(line_no);
      }
      if (!seen.emplace(record->id, file.string()).second) {
        return Error(ErrorCode::kSchemaViolation, "duplicate record id", record->id).WithIndex(line_no);
      }
      records.push_back(std::move(record).value());
    }
  }
  return records;
}

std::string NormalizeAtom(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : Trim(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (out.size() >= 2 && (out.front() == '"' || out.front() == '\'') && out.back() == out.front()) {
    out = Trim(out.substr(1, out.size() - 2));
  }
  if (!out.empty() && out.back() == '.') out = Trim(out.substr(0, out.size() - 1));
  return out;
}

bool ScoreAnswer(std::string_view predicted, const AnswerValue& gold) {
  return MatchElement(predicted, gold);
}

PlanPrediction PlanPrediction::FromSteps(const std::vector<PlanStep>& steps) {
  PlanPrediction p;
  for (const PlanStep& s : steps) {
    p.tools.push_back(CanonicalizeToolName(s.tool));
    p.subtasks.push_back(s.subtask);
  }
  return p;
}

PlanPrediction PlanPrediction::FromDecisions(const std::vector<PlannerDecision>& decisions) {
  PlanPrediction p;
  for (const PlannerDecision& d : decisions) {
    if (const auto* l = std::get_if<ToolList>(&d)) {
      for (const std::string& t : l->tools) p.tools.push_back(CanonicalizeToolName(t));
    } else if (const auto* dl = std::get_if<ToolAndSubtaskLists>(&d)) {
      for (const std::string& t : dl->tools) p.tools.push_back(CanonicalizeToolName(t));
      p.subtasks.insert(p.subtasks.end(), dl->subtasks.begin(), dl->subtasks.end());
    } else if (const auto* pl = std::get_if<PairList>(&d)) {
      for (const PlanStep& s : pl->steps) {
        p.tools.push_back(CanonicalizeToolName(s.tool));
        p.subtasks.push_back(s.subtask);
      }
    } else if (const auto* q = std::get_if<StepwiseQuery>(&d)) {
      p.tools.push_back(CanonicalizeToolName(q->step.tool));
      p.subtasks.push_back(q->step.subtask);
    }
  }
  return p;
}

std::string PlanPrediction::ToString() const {
  std::vector<std::string> parts;
  for (size_t i = 0; i < tools.size(); ++i) {
    if (i < subtasks.size()) {
      parts.push_back(RenderToolQuery(PlanStep{tools[i], subtasks[i]}));
    } else {
      parts.push_back(SurfaceToolName(tools[i]));
    }
  }
  for (size_t i = tools.size(); i < subtasks.size(); ++i) parts.push_back("?: " + subtasks[i]);
  return "[" + Join(parts, ", ") + "]";
}

bool ScorePlan(const PlanPrediction& predicted, const QARecord& record, EvalMode mode) {
  if (!IsPlanMode(mode)) return false;
  std::vector<std::string> gold;
  for (const std::string& t : record.gold_tools) gold.push_back(CanonicalizeToolName(t));
  if (predicted.tools != gold) return false;
  if (mode == EvalMode::kToolOrder) return true;
  if (predicted.subtasks.size() != predicted.tools.size()) return false;
  return std::none_of(predicted.subtasks.begin(), predicted.subtasks.end(),
                      [](const std::string& s) { return Trim(s).empty(); });
}

std::vector<std::string> GoldStepResults(const QARecord& record) {
  const AnswerValue& gold = record.gold_answer;
  std::vector<std::string> out;
  if (gold.kind() == AnswerValue::Kind::kSequence && gold.items().size() == record.gold_tools.size()) {
    for (const AnswerValue& item : gold.items()) out.push_back(PlainText(item));
  } else if (record.gold_tools.size() == 1) {
    out.push_back(PlainText(gold));
  }
  return out;
}

Result<std::string> ReferenceAnswer(const QARecord& record, const Database& db, Sandbox& sandbox) {
  std::vector<std::string> lines;
  bool used_sql = false;
  bool used_code = false;
  auto run_sql = [&]() -> Status {
    if (!record.sql_reference) return Error(ErrorCode::kInvalidArgument, "no sql_reference", record.id);
    TOOLPLAN_ASSIGN_OR_RETURN(ResultTable t, db.Execute(*record.sql_reference));
    lines.push_back(t.ToText());
    used_sql = true;
    return Status();
  };
  auto run_code = [&]() -> Status {
    if (!record.code_reference) return Error(ErrorCode::kInvalidArgument, "no code_reference", record.id);
    TOOLPLAN_ASSIGN_OR_RETURN(AnswerValue v, sandbox.RunSolution(WrapAsSolution(*record.code_reference)));
    lines.push_back(v.ToString());
    used_code = true;
    return Status();
  };
  for (const std::string& tool : record.gold_tools) {
    const std::string canonical = CanonicalizeToolName(tool);
    if (canonical == kSqlGenerator) TOOLPLAN_RETURN_IF_ERROR(run_sql());
    if (canonical == kCodeGenerator) TOOLPLAN_RETURN_IF_ERROR(run_code());
  }
  if (!used_code && record.code_reference) TOOLPLAN_RETURN_IF_ERROR(run_code());
  if (!used_sql && record.sql_reference) TOOLPLAN_RETURN_IF_ERROR(run_sql());
  if (lines.empty()) return Error(ErrorCode::kInvalidArgument, "record has no reference", record.id);
  // A single gold value is the answer of the last step.
  const AnswerValue& gold = record.gold_answer;
  if (gold.kind() != AnswerValue::Kind::kSequence || gold.items().size() != lines.size()) {
    return lines.back();
  }
  return Join(lines, "\n");
}

bool IsInfrastructureError(const Error& error) {
  for (const Error* e = &error; e != nullptr; e = e->cause.get()) {
    if (e->code == ErrorCode::kSandboxSpawnFailure || e->code == ErrorCode::kIoError) return true;
  }
  for (const Error* e = &error; e != nullptr; e = e->cause.get()) {
    // Timeouts of the model's own SQL or code are its failures.
    if (e->code == ErrorCode::kToolChainFailure && e->subject == "execute") return false;
  }
  switch (error.Root().code) {
    case ErrorCode::kTimeout:
    case ErrorCode::kRateLimited:
    case ErrorCode::kAuthFailure:
    case ErrorCode::kTransportError:
    case ErrorCode::kInvalidRequest:
    case ErrorCode::kScriptExhausted:
    case ErrorCode::kPromptMismatch:
    case ErrorCode::kSessionBusy:
      return true;
    default:
      return false;
  }
}

double EvalReport::accuracy() const { return n == 0 ? 0.0 : 100.0 * correct / n; }

std::string FormatAccuracy(int64_t correct, int64_t n) {
  if (n <= 0) return "n/a";
  const int64_t tenths = (2000 * correct + n) / (2 * n);
  std::string out = std::to_string(tenths / 10);
  if (tenths % 10 != 0) out += "." + std::to_string(tenths % 10);
  return out + "%";
}

Json EvalReport::ToJson() const {
  Json verdict_list = Json::array();
  for (const Verdict& v : verdicts) {
    Json j = {{"id", v.id},
              {"predicted", v.predicted},
              {"gold", v.gold},
              {"correct", v.correct},
              {"transcript_ref", v.transcript_ref}};
    if (v.error) j["error"] = *v.error;
    verdict_list.push_back(std::move(j));
  }
  return {{"mode", std::string(EvalModeName(mode))},
          {"model", model},
          {"n", n},
          {"correct", correct},
          {"accuracy", FormatAccuracy(correct, n)},
          {"verdicts", std::move(verdict_list)}};
}

Result<EvalReport> RunEval(EvalMode mode, const std::vector<QARecord>& records, const EvalEnv& env,
                           const EvalConfig& config) {
  if (records.empty()) return Error(ErrorCode::kInvalidArgument, "dataset is empty");
  if (env.provider == nullptr || env.prompts == nullptr) {
    return Error(ErrorCode::kInvalidArgument, "provider and prompts are required");
  }
  int workers = env.provider->deterministic() ? 1 : std::max(1, config.parallelism);
  workers = std::min<int>(workers, static_cast<int>(records.size()));

  FixtureCache fixtures;
  std::vector<std::optional<RecordOutcome>> outcomes(records.size());
  std::atomic<size_t> next{0};
  std::atomic<bool> abort{false};
  std::mutex mu;
  std::optional<Error> first_failure;
  size_t failed_index = 0;

  auto work = [&]() {
    while (!abort.load()) {
      const size_t i = next.fetch_add(1);
      if (i >= records.size()) return;
      auto r = EvaluateRecord(mode, records[i], env, config, fixtures);
      if (r.ok()) {
        outcomes[i] = std::move(r).value();
        continue;
      }
      std::lock_guard<std::mutex> lock(mu);
      if (!first_failure || i < failed_index) {
        first_failure = r.error();
        failed_index = i;
      }
      abort = true;
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (first_failure) {
    return Error(first_failure->Root().code,
                 "evaluation aborted at record " + records[failed_index].id, records[failed_index].id)
        .WithIndex(static_cast<int64_t>(failed_index))
        .WithCause(*first_failure);
  }

  std::vector<RecordOutcome*> sorted;
  for (auto& o : outcomes) sorted.push_back(&*o);
  std::sort(sorted.begin(), sorted.end(),
            [](const RecordOutcome* a, const RecordOutcome* b) { return a->verdict.id < b->verdict.id; });
  EvalReport report;
  report.mode = mode;
  report.model = config.model.empty() ? env.provider->name() : config.model;
  for (RecordOutcome* o : sorted) {
    o->verdict.transcript_ref = static_cast<int64_t>(report.transcripts.size());
    report.correct += o->verdict.correct ? 1 : 0;
    report.verdicts.push_back(std::move(o->verdict));
    report.transcripts.push_back(std::move(o->transcript));
  }
  report.n = static_cast<int64_t>(report.verdicts.size());
  return report;
}

Result<std::string> RenderReport(const std::vector<EvalReport>& reports) {
  if (reports.empty()) return Error(ErrorCode::kInvalidArgument, "no reports to render");
  std::vector<std::string> models;
  std::vector<EvalMode> modes;
  for (const EvalReport& r : reports) {
    if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
    if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) modes.push_back(r.mode);
  }
  std::sort(models.begin(), models.end());
  std::sort(modes.begin(), modes.end());
  auto cell = [&](const std::string& model, EvalMode mode) -> std::string {
    for (const EvalReport& r : reports) {
      if (r.model == model && r.mode == mode) {
        return FormatAccuracy(r.correct, r.n) + " (" + std::to_string(r.correct) + "/" +
               std::to_string(r.n) + ")";
      }
    }
    return "-";
  };

  std::vector<std::vector<std::string>> grid;
  grid.push_back({"Model"});
  for (EvalMode m : modes) grid[0].emplace_back(EvalModeName(m));
  for (const std::string& model : models) {
    std::vector<std::string> row = {model};
    for (EvalMode m : modes) row.push_back(cell(model, m));
    grid.push_back(std::move(row));
  }
  std::vector<size_t> width(grid[0].size(), 0);
  for (const auto& row : grid) {
    for (size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (size_t r = 0; r < grid.size(); ++r) {
    for (size_t c = 0; c < grid[r].size(); ++c) {
      out += c == 0 ? "" : " | ";
      out += grid[r][c] + std::string(width[c] - grid[r][c].size(), ' ');
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += "\n";
    if (r == 0) {
      for (size_t c = 0; c < width.size(); ++c) out += (c == 0 ? "" : "-+-") + std::string(width[c], '-');
      out += "\n";
    }
  }

  std::vector<const EvalReport*> ordered;
  for (const EvalReport& r : reports) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(), [](const EvalReport* a, const EvalReport* b) {
    return std::tie(a->model, a->mode) < std::tie(b->model, b->mode);
  });
  for (const EvalReport* r : ordered) {
    out += "\n## " + r->model + " / " + std::string(EvalModeName(r->mode)) + ": " +
           std::to_string(r->correct) + " of " + std::to_string(r->n) + " correct\n";
    for (const Verdict& v : r->verdicts) {
      std::string predicted = v.predicted;
      std::replace(predicted.begin(), predicted.end(), '\n', ' ');
      out += (v.correct ? "  ok    " : "  MISS  ") + v.id + "  predicted: " + predicted +
             "  gold: " + v.gold;
      if (v.error) out += "  error: " + *v.error;
      out += "  transcript: " + std::to_string(v.transcript_ref) + "\n";
    }
  }
  return out;
}

Json ReportsToJson(const std::vector<EvalReport>& reports) {
  Json out = Json::array();
  for (size_t k = 0; k < reports.size(); ++k) {
    Json j = reports[k].ToJson();
    j["transcripts"] = "transcripts-" + std::to_string(k) + ".jsonl";
    out.push_back(std::move(j));
  }
  return Json{{"reports", std::move(out)}};
}

Status WriteReportFiles(const std::vector<EvalReport>& reports, const std::filesystem::path& dir) {
  TOOLPLAN_ASSIGN_OR_RETURN(std::string text, RenderReport(reports));
  TOOLPLAN_RETURN_IF_ERROR(WriteFile(dir / "report.txt", text));
  TOOLPLAN_RETURN_IF_ERROR(WriteFile(dir / "report.json", ReportsToJson(reports).dump(2) + "\n"));
  for (size_t k = 0; k < reports.size(); ++k) {
    const auto path = dir / ("transcripts-" + std::to_string(k) + ".jsonl");
    TOOLPLAN_RETURN_IF_ERROR(WriteFile(path, ""));
    TOOLPLAN_RETURN_IF_ERROR(AppendTranscripts(path, reports[k].transcripts));
  }
  return Status();
}

}  // namespace toolplan
