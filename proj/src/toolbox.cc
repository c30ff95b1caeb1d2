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

#include "toolplan/toolbox.h"

#include <chrono>
#include <utility>

#include "toolplan/response_parsers.h"

namespace toolplan {
namespace {

std::string OneLine(std::string_view text) {
  std::string out;
  bool space = false;
  for (char c : text) {
    if (c == '\n' || c == '\r' || c == '\t' || c == ' ') {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

}  // namespace

std::string_view SqlTemplateId(SqlVariant v) {
  switch (v) {
    case SqlVariant::kSimple:
      return "sql-simple";
    case SqlVariant::kNestedDirect:
      return "sql-nested-direct";
    case SqlVariant::kNestedCot:
      return "sql-nested-cot";
  }
  return "sql-simple";
}

Result<SqlVariant> SqlVariantFromName(std::string_view name) {
  if (name == "simple") return SqlVariant::kSimple;
  if (name == "nested-direct") return SqlVariant::kNestedDirect;
  if (name == "nested-cot") return SqlVariant::kNestedCot;
  return Error(ErrorCode::kInvalidArgument,
               "unknown SQL variant; expected simple, nested-direct or nested-cot",
               std::string(name));
}

std::string ErrorFeedback(std::string_view failed_output, const Error& error) {
  std::string out = Trim(failed_output);
  if (!out.empty()) out += "\n";
  return out + error.ToString();
}

Toolbox::Toolbox(ToolContext context, ToolboxConfig config)
    : ctx_(context), config_(std::move(config)) {}

std::string Toolbox::SqlQuestion(std::string_view subtask, std::string_view history) {
  const std::string digest = OneLine(history);
  if (digest.empty()) return std::string(subtask);
  return "Given: " + digest + " " + std::string(subtask);
}

void Toolbox::Log(TurnRecord turn) {
  if (ctx_.transcript != nullptr) ctx_.transcript->Append(std::move(turn));
}

Result<std::string> Toolbox::Complete(const std::string& prompt, TurnRecord* turn,
                                      AttemptOutcome* outcome) {
  stage_ = "complete";
  turn->prompt = prompt;
  auto c = ctx_.provider->Complete(config_.model.Request("", prompt));
  if (!c.ok()) {
    outcome->retryable = false;
    return c.take_error();
  }
  turn->completion = c->text;
  return c->text;
}

Result<ToolResult> Toolbox::Invoke(const PlanStep& step, std::string_view history) {
  if (ctx_.provider == nullptr || ctx_.prompts == nullptr) {
    return Error(ErrorCode::kInvalidArgument, "toolbox has no provider or prompt library");
  }
  const std::string tool = CanonicalizeToolName(step.tool);
  Result<ToolResult> r = Error(ErrorCode::kUnsupportedTool, "", tool);
  if (tool == kSqlGenerator) {
    r = InvokeSql(step, history);
  } else if (tool == kCodeGenerator) {
    r = InvokeCode(step, history);
  } else {
    const ToolSpec* spec = ToolRegistry::Default().Find(tool);
    return Error(ErrorCode::kUnsupportedTool,
                 spec != nullptr ? "tool is in the catalog but cannot be executed"
                                 : "tool is not in the catalog",
                 tool);
  }
  if (r.ok()) return r;
  Error e = r.take_error();
  if (e.code == ErrorCode::kInvalidArgument && stage_.empty()) return e;
  return Error(ErrorCode::kToolChainFailure, tool + " failed", stage_).WithCause(std::move(e));
}

Result<ToolResult> Toolbox::InvokeSql(const PlanStep& step, std::string_view history) {
  stage_.clear();
  if (ctx_.db == nullptr) {
    return Error(ErrorCode::kInvalidArgument, "the SQL generator needs a fixture database");
  }
  TOOLPLAN_ASSIGN_OR_RETURN(std::string schema, RenderSchemaBlock(*ctx_.db));
  const std::string template_id(SqlTemplateId(config_.sql_variant));
  const SqlLabel label =
      config_.sql_variant == SqlVariant::kSimple ? SqlLabel::kSqlQuery : SqlLabel::kAnswer;
  const std::string question = SqlQuestion(step.subtask, history);

  auto attempt = [&](const std::string& error_slot, AttemptOutcome* outcome) -> Result<ToolResult> {
    stage_ = "render";
    auto prompt = ctx_.prompts->Render(
        template_id, {{"question", question}, {"error", error_slot}, {"schema_block", schema}});
    if (!prompt.ok()) {
      outcome->retryable = false;
      return prompt.take_error();
    }
    const auto start = std::chrono::steady_clock::now();
    TurnRecord turn;
    turn.role = TurnRole::kTool;
    turn.decision = Json{{"tool", std::string(kSqlGenerator)}, {"subtask", step.subtask}};
    auto finish = [&](Json result) {
      turn.result = std::move(result);
      turn.wall_time = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::steady_clock::now() - start);
      Log(std::move(turn));
    };
    auto completion = Complete(*prompt, &turn, outcome);
    if (!completion.ok()) {
      finish(TurnRecord::Failure(completion.error()));
      return completion.take_error();
    }
    stage_ = "parse";
    auto sql = ParseSql(*completion, label);
    if (!sql.ok()) {
      outcome->failed_output = *completion;
      finish(TurnRecord::Failure(sql.error()));
      return sql.take_error();
    }
    turn.decision["sql"] = sql->text;
    stage_ = "execute";
    auto table = ctx_.db->Execute(sql->text);
    if (!table.ok()) {
      outcome->failed_output = sql->text;
      finish(TurnRecord::Failure(table.error()));
      return table.take_error();
    }
    ToolResult out;
    out.text = table->ToText();
    Json rows = Json::array();
    for (const auto& row : table->rows) {
      Json r = Json::array();
      for (const Cell& c : row) r.push_back(CellToJson(c));
      rows.push_back(std::move(r));
    }
    out.artifacts = {{"sql", sql->text}, {"columns", table->columns}, {"rows", std::move(rows)}};
    finish(TurnRecord::Value(out.text));
    return out;
  };
  return RetryWithError<ToolResult>(config_.max_retries, attempt);
}

Result<ToolResult> Toolbox::InvokeCode(const PlanStep& step, std::string_view history) {
  stage_.clear();
  if (ctx_.sandbox == nullptr) {
    return Error(ErrorCode::kInvalidArgument, "the code generator needs a sandbox");
  }
  const std::string history_text(history);
  auto attempt = [&](const std::string& error_slot, AttemptOutcome* outcome) -> Result<ToolResult> {
    stage_ = "render";
    auto prompt = ctx_.prompts->Render(
        "math-solution",
        {{"history", history_text}, {"question", step.subtask}, {"error", error_slot}});
    if (!prompt.ok()) {
      outcome->retryable = false;
      return prompt.take_error();
    }
    const auto start = std::chrono::steady_clock::now();
    TurnRecord turn;
    turn.role = TurnRole::kTool;
    turn.decision = Json{{"tool", std::string(kCodeGenerator)}, {"subtask", step.subtask}};
    auto finish = [&](Json result) {
      turn.result = std::move(result);
      turn.wall_time = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::steady_clock::now() - start);
      Log(std::move(turn));
    };
    auto completion = Complete(*prompt, &turn, outcome);
    if (!completion.ok()) {
      finish(TurnRecord::Failure(completion.error()));
      return completion.take_error();
    }
    stage_ = "parse";
    auto code = ParseSolutionCode(*completion);
    if (!code.ok()) {
      outcome->failed_output = *completion;
      finish(TurnRecord::Failure(code.error()));
      return code.take_error();
    }
    turn.decision["code"] = code->code;
    stage_ = "execute";
    auto value = ctx_.sandbox->RunSolution(code->code);
    if (!value.ok()) {
      outcome->failed_output = code->code;
      // The model cannot fix a sandbox that fails to start.
      if (value.error().code == ErrorCode::kSandboxSpawnFailure) outcome->retryable = false;
      finish(TurnRecord::Failure(value.error()));
      return value.take_error();
    }
    ToolResult out;
    out.text = value->ToString();
    out.artifacts = {{"code", code->code}, {"value", value->ToJson()}};
    finish(TurnRecord::Value(out.text));
    return out;
  };
  return RetryWithError<ToolResult>(config_.max_retries, attempt);
}

}  // namespace toolplan
