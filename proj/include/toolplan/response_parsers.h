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

// Parsers for the output grammars the prompt templates elicit.
//
// All parsers are total: any byte string yields either a value or a typed
// Error, never a crash. Common rules:
//   * A label ("Tool", "Tasks", "Tool_Query", ...) only counts at the start
//     of a line. Matching is case-insensitive and tolerates whitespace
//     before the colon; the content after it is kept byte-exact.
//   * When a label occurs several times the last occurrence wins.
//   * Prompts end with the label the model is meant to fill in, so a
//     completion may omit it. If the label is absent but the text opens
//     with the expected value ("[", "{", "None", "select", ...), the value
//     is parsed from the start of the text.
//   * Dict literals accept single or double quotes and doubled braces.
//   * Tool names are canonicalized; unknown names are kept verbatim.

#ifndef TOOLPLAN_RESPONSE_PARSERS_H_
#define TOOLPLAN_RESPONSE_PARSERS_H_

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "toolplan/core_model.h"
#include "toolplan/result.h"

namespace toolplan {

struct ToolList {
  std::vector<std::string> tools;
  friend bool operator==(const ToolList&, const ToolList&) = default;
};

// Both lists are kept even when their lengths differ.
struct ToolAndSubtaskLists {
  std::vector<std::string> tools;
  std::vector<std::string> subtasks;
  bool aligned() const { return tools.size() == subtasks.size(); }
  friend bool operator==(const ToolAndSubtaskLists&, const ToolAndSubtaskLists&) = default;
};

struct PairList {
  std::vector<PlanStep> steps;
  friend bool operator==(const PairList&, const PairList&) = default;
};

struct StepwiseQuery {
  PlanStep step;
  friend bool operator==(const StepwiseQuery&, const StepwiseQuery&) = default;
};

struct StepwiseFinal {
  std::string answer;
  friend bool operator==(const StepwiseFinal&, const StepwiseFinal&) = default;
};

struct ReactAct {
  std::string action;  // canonicalized
  std::string action_input;
  friend bool operator==(const ReactAct&, const ReactAct&) = default;
};

struct ReactFinal {
  std::string answer;
  friend bool operator==(const ReactFinal&, const ReactFinal&) = default;
};

using PlannerDecision = std::variant<ToolList, ToolAndSubtaskLists, PairList, StepwiseQuery,
                                     StepwiseFinal, ReactAct, ReactFinal>;

Json DecisionToJson(const PlannerDecision& d);
Result<PlannerDecision> DecisionFromJson(const Json& j);

struct SqlStatement {
  std::string text;
  friend bool operator==(const SqlStatement&, const SqlStatement&) = default;
};

struct CodeSnippet {
  std::string code;                           // "def solution():" and its body
  std::optional<std::string> claimed_answer;  // trailing "Answer:" line, if any
  friend bool operator==(const CodeSnippet&, const CodeSnippet&) = default;
};

// Which label introduces the SQL text.
enum class SqlLabel { kSqlQuery, kAnswer };

// `Tool: ["Python Generator", "SQL Generator"]`
Result<ToolList> ParseToolList(std::string_view text);

// `Tasks:[{"PythonREPL": "..."}, {"SQL Generator": "..."}]`
Result<PairList> ParsePairList(std::string_view text);

// `Tool_Query:{"PythonREPL": "..."}` or `Tool_Query:None ... Final_Answer: x`.
// Output after the first Result line of a real query, or after the
// Final_Answer line, is ignored.
Result<PlannerDecision> ParseStepwise(std::string_view text);

// Thought/Action/ActionInput. The first complete Action+ActionInput pair
// wins; anything after it (a hallucinated Observation included) is dropped.
Result<PlannerDecision> ParseReact(std::string_view text);

// Exactly one statement; a trailing semicolon is removed.
Result<SqlStatement> ParseSql(std::string_view text, SqlLabel label);

// The `def solution():` block, with or without code fences.
Result<CodeSnippet> ParseSolutionCode(std::string_view text);

// `Tool: [...]` plus `Subtasks: [...]`.
Result<ToolAndSubtaskLists> ParseDualLists(std::string_view text);

// Runs the parser named by `grammar` (tool_list, dual_lists, pairs,
// stepwise, react, sql_query, sql_answer, solution_code) and returns its
// value as JSON: a decision object, {"sql": ...} or {"code": ...,
// "claimed_answer": ...}. Unknown grammar names yield InvalidArgument.
Result<Json> ParseByGrammar(std::string_view grammar, std::string_view text);

// Turns a reference body such as "import math; return math.exp(3)" into a
// `def solution():` definition. Text that already defines solution() is
// returned unchanged.
std::string WrapAsSolution(std::string_view body);

}  // namespace toolplan

#endif  // TOOLPLAN_RESPONSE_PARSERS_H_
