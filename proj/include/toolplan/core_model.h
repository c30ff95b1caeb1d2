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

// Domain types shared by every module: tool specs and the registry, plan
// steps, answer values, dataset records and run transcripts.

#ifndef TOOLPLAN_CORE_MODEL_H_
#define TOOLPLAN_CORE_MODEL_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "toolplan/result.h"

namespace toolplan {

using Json = nlohmann::json;

inline constexpr std::string_view kSqlGenerator = "sql-generator";
inline constexpr std::string_view kCodeGenerator = "code-generator";

struct ToolSpec {
  std::string name;          // canonical identifier, e.g. "sql-generator"
  std::string display_name;  // catalog name, e.g. "SQL generator"
  std::string description;
  bool executable = false;
};

// Maps any known surface form of a tool name ("PythonREPL", "Python
// Generator", "SQL生成器", ...) to its canonical identifier. Unknown names
// come back trimmed but otherwise verbatim. Idempotent.
std::string CanonicalizeToolName(std::string_view raw);

// Name used when a canonical tool appears inside prompt text.
std::string SurfaceToolName(std::string_view canonical);

class ToolRegistry {
 public:
  // The twelve-tool catalog; only the SQL and code generators execute.
  static ToolRegistry Default();

  Status Add(ToolSpec spec);
  // Lookup accepts canonical names, display names and aliases.
  const ToolSpec* Find(std::string_view name) const;
  size_t size() const { return specs_.size(); }
  const std::vector<ToolSpec>& specs() const { return specs_; }

 private:
  std::vector<ToolSpec> specs_;
};

// One {tool: subtask} pair. `tool` holds the canonicalized name, or the raw
// name when it is not a known tool.
struct PlanStep {
  std::string tool;
  std::string subtask;

  friend bool operator==(const PlanStep&, const PlanStep&) = default;
};

// A gold or predicted answer.
//
// Numbers remember the text they were printed with so that comparisons can
// be made at the printed precision ("20.08" has precision 2).
class AnswerValue {
 public:
  enum class Kind { kNumber, kText, kSet, kSequence };

  struct Number {
    double value = 0;
    int precision = 0;
    std::string text;
    friend bool operator==(const Number&, const Number&) = default;
  };

  // Fails unless `printed` is a plain decimal literal.
  static Result<AnswerValue> ParseNumber(std::string_view printed);
  static AnswerValue FromNumberText(std::string_view printed);  // must parse
  static AnswerValue Text(std::string text);
  static AnswerValue Set(std::vector<AnswerValue> items);
  static AnswerValue Sequence(std::vector<AnswerValue> items);
  // Number when `raw` is a decimal literal, Text otherwise.
  static AnswerValue Infer(std::string_view raw);

  Kind kind() const { return kind_; }
  const Number& number() const { return number_; }
  const std::string& text() const { return text_; }
  const std::vector<AnswerValue>& items() const { return items_; }
  bool empty() const;

  // Human-readable form: numbers as printed, sets/sequences bracketed.
  std::string ToString() const;
  Json ToJson() const;
  static Result<AnswerValue> FromJson(const Json& j);

  friend bool operator==(const AnswerValue&, const AnswerValue&) = default;

 private:
  Kind kind_ = Kind::kText;
  Number number_;
  std::string text_;
  std::vector<AnswerValue> items_;
};

struct QARecord {
  std::string id;
  std::string fixture;
  std::string question;
  AnswerValue gold_answer;
  std::vector<std::string> gold_tools;  // canonicalized on load
  std::optional<std::string> sql_reference;
  std::optional<std::string> code_reference;

  Json ToJson() const;
  // Validates the record; `line` is used in SchemaViolation errors.
  static Result<QARecord> FromJson(const Json& j, int64_t line = -1);
  friend bool operator==(const QARecord&, const QARecord&) = default;
};

enum class TurnRole { kPlanner, kTool, kSummarizer };
std::string_view TurnRoleName(TurnRole role);

Json ErrorToJson(const Error& e);
// Empty when `j` is not a well-formed error object.
std::optional<Error> ErrorFromJson(const Json& j);

struct TurnRecord {
  TurnRole role = TurnRole::kPlanner;
  std::string prompt;
  std::string completion;
  // Parsed value ({"kind": ...}), {"error": {...}} or null.
  Json decision;
  // {"text": ...}, {"error": {...}} or null.
  Json result;
  std::chrono::microseconds wall_time{0};

  static Json Value(std::string text) { return Json{{"text", std::move(text)}}; }
  static Json Failure(const Error& e) { return Json{{"error", ErrorToJson(e)}}; }

  friend bool operator==(const TurnRecord&, const TurnRecord&) = default;
};

struct Outcome {
  bool success = false;
  std::string reason;  // empty on success
  friend bool operator==(const Outcome&, const Outcome&) = default;
};

class Transcript {
 public:
  Transcript() = default;
  explicit Transcript(std::string question) : question_(std::move(question)) {}

  const std::string& question() const { return question_; }
  const std::vector<TurnRecord>& entries() const { return entries_; }
  const std::optional<std::string>& final_answer() const { return final_answer_; }
  const Outcome& outcome() const { return outcome_; }
  const std::string& answer_mode() const { return answer_mode_; }

  void Append(TurnRecord turn) { entries_.push_back(std::move(turn)); }
  // At most one final answer per transcript.
  Status SetFinalAnswer(std::string answer);
  void Succeed() { outcome_ = Outcome{true, ""}; }
  void Fail(const Error& e) { outcome_ = Outcome{false, e.ToString()}; }
  void set_answer_mode(std::string mode) { answer_mode_ = std::move(mode); }

  size_t CountRole(TurnRole role) const;
  // Copy with every wall_time zeroed, for comparing runs.
  Transcript WithoutTimings() const;

  Json ToJson() const;
  static Result<Transcript> FromJson(const Json& j);
  friend bool operator==(const Transcript&, const Transcript&) = default;

 private:
  std::string question_;
  std::vector<TurnRecord> entries_;
  std::optional<std::string> final_answer_;
  Outcome outcome_;
  std::string answer_mode_;
};

// JSON Lines log: one transcript per line.
Status AppendTranscripts(const std::filesystem::path& path,
                         const std::vector<Transcript>& transcripts);
Result<std::vector<Transcript>> ReadTranscripts(const std::filesystem::path& path);

// Small string helpers used across modules.
std::string Trim(std::string_view s);
std::string ToLower(std::string_view s);
Result<std::string> ReadFile(const std::filesystem::path& path);
Status WriteFile(const std::filesystem::path& path, std::string_view contents);

// Shortest decimal text that round-trips `v` ("35.16", "1600", "0.69897...").
std::string FormatDouble(double v);

// Directory holding prompts, fixtures, datasets and cassettes. Honors the
// TOOLPLAN_DATA_DIR environment variable, else the build-time default.
std::filesystem::path DataDir();

}  // namespace toolplan

#endif  // TOOLPLAN_CORE_MODEL_H_
