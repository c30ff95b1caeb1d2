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

// Executes one plan step: renders the tool's prompt, asks the model for
// SQL or code, parses it, runs it, and retries with error feedback.

#ifndef TOOLPLAN_TOOLBOX_H_
#define TOOLPLAN_TOOLBOX_H_

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "toolplan/code_sandbox.h"
#include "toolplan/core_model.h"
#include "toolplan/llm_gateway.h"
#include "toolplan/prompt_engine.h"
#include "toolplan/result.h"
#include "toolplan/sql_workbench.h"

namespace toolplan {

enum class SqlVariant { kSimple, kNestedDirect, kNestedCot };
std::string_view SqlTemplateId(SqlVariant v);
Result<SqlVariant> SqlVariantFromName(std::string_view name);  // simple, nested-direct, nested-cot

// Text for the Error slot after a failed attempt: the failed output as the
// model produced it, then the error.
std::string ErrorFeedback(std::string_view failed_output, const Error& error);

struct AttemptOutcome {
  std::string failed_output;  // set by the attempt when it fails
  bool retryable = true;      // false for failures feedback cannot fix
};

// Calls `attempt` with kNoError, then after each retryable failure with
// ErrorFeedback() of that failure, for at most 1 + max_retries calls.
// Errors: InvalidArgument (max_retries < 0); RetriesExhausted caused by the
// last failure; a non-retryable failure is returned as is.
template <typename T>
Result<T> RetryWithError(
    int max_retries,
    const std::function<Result<T>(const std::string& error_slot, AttemptOutcome* outcome)>&
        attempt,
    int* attempts_made = nullptr) {
  if (max_retries < 0) return Error(ErrorCode::kInvalidArgument, "max_retries must be >= 0");
  std::string slot(kNoError);
  std::optional<Error> last;
  int made = 0;
  for (int i = 0; i <= max_retries; ++i) {
    AttemptOutcome outcome;
    ++made;
    if (attempts_made != nullptr) *attempts_made = made;
    Result<T> r = attempt(slot, &outcome);
    if (r.ok() || !outcome.retryable) return r;
    last = r.error();
    slot = ErrorFeedback(outcome.failed_output, *last);
  }
  return Error(ErrorCode::kRetriesExhausted, std::to_string(made) + " attempts failed")
      .WithCause(*last);
}

struct ToolResult {
  std::string text;
  Json artifacts;  // {"sql", "columns", "rows"} or {"code", "value"}
};

struct ToolboxConfig {
  SqlVariant sql_variant = SqlVariant::kSimple;
  int max_retries = 2;
  ModelSettings model;
};

// Shared, non-owning handles a tool call needs. `db`, `sandbox` and
// `transcript` may be null; a call that needs a missing handle fails.
struct ToolContext {
  CompletionProvider* provider = nullptr;
  const PromptLibrary* prompts = nullptr;
  const Database* db = nullptr;
  Sandbox* sandbox = nullptr;
  Transcript* transcript = nullptr;  // every attempt is appended here
};

class Toolbox {
 public:
  Toolbox(ToolContext context, ToolboxConfig config);

  // `history` is the rendered history of earlier steps (possibly empty).
  // Errors: UnsupportedTool; ToolChainFailure whose subject names the
  // failing stage (complete, parse, execute) and whose cause chain ends in
  // the underlying error.
  Result<ToolResult> Invoke(const PlanStep& step, std::string_view history);

  // The question an SQL prompt gets: the subtask, preceded by
  // "Given: <history on one line>" when there is history.
  static std::string SqlQuestion(std::string_view subtask, std::string_view history);

  const ToolboxConfig& config() const { return config_; }

 private:
  Result<ToolResult> InvokeSql(const PlanStep& step, std::string_view history);
  Result<ToolResult> InvokeCode(const PlanStep& step, std::string_view history);
  Result<std::string> Complete(const std::string& prompt, TurnRecord* turn, AttemptOutcome* outcome);
  void Log(TurnRecord turn);

  ToolContext ctx_;
  ToolboxConfig config_;
  std::string stage_;
};

}  // namespace toolplan

#endif  // TOOLPLAN_TOOLBOX_H_
