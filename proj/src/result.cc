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

#include "toolplan/result.h"

#include <array>
#include <utility>

namespace toolplan {
namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 43> kNames = {{
    {ErrorCode::kMissingSlot, "MissingSlot"},
    {ErrorCode::kUnknownSlot, "UnknownSlot"},
    {ErrorCode::kUnknownTemplate, "UnknownTemplate"},
    {ErrorCode::kEmptyFixture, "EmptyFixture"},
    {ErrorCode::kMissingField, "MissingField"},
    {ErrorCode::kMalformedList, "MalformedList"},
    {ErrorCode::kMalformedDict, "MalformedDict"},
    {ErrorCode::kMultiKeyEntry, "MultiKeyEntry"},
    {ErrorCode::kFinalWithoutAnswer, "FinalWithoutAnswer"},
    {ErrorCode::kMissingAction, "MissingAction"},
    {ErrorCode::kMissingActionInput, "MissingActionInput"},
    {ErrorCode::kMultipleStatements, "MultipleStatements"},
    {ErrorCode::kEmptyStatement, "EmptyStatement"},
    {ErrorCode::kNoSolutionFunction, "NoSolutionFunction"},
    {ErrorCode::kInvalidRequest, "InvalidRequest"},
    {ErrorCode::kTimeout, "Timeout"},
    {ErrorCode::kRateLimited, "RateLimited"},
    {ErrorCode::kAuthFailure, "AuthFailure"},
    {ErrorCode::kTransportError, "TransportError"},
    {ErrorCode::kScriptExhausted, "ScriptExhausted"},
    {ErrorCode::kPromptMismatch, "PromptMismatch"},
    {ErrorCode::kSessionBusy, "SessionBusy"},
    {ErrorCode::kEmptyTranscript, "EmptyTranscript"},
    {ErrorCode::kUnknownFixture, "UnknownFixture"},
    {ErrorCode::kNotASelect, "NotASelect"},
    {ErrorCode::kSqlError, "SqlError"},
    {ErrorCode::kConstraintUnsatisfiable, "ConstraintUnsatisfiable"},
    {ErrorCode::kRuntimeError, "RuntimeError"},
    {ErrorCode::kSerializationError, "SerializationError"},
    {ErrorCode::kSandboxSpawnFailure, "SandboxSpawnFailure"},
    {ErrorCode::kUnsupportedTool, "UnsupportedTool"},
    {ErrorCode::kToolChainFailure, "ToolChainFailure"},
    {ErrorCode::kRetriesExhausted, "RetriesExhausted"},
    {ErrorCode::kPlanningParseFailure, "PlanningParseFailure"},
    {ErrorCode::kStepFailure, "StepFailure"},
    {ErrorCode::kEmptyPlan, "EmptyPlan"},
    {ErrorCode::kStepLimitExceeded, "StepLimitExceeded"},
    {ErrorCode::kTurnParseFailure, "TurnParseFailure"},
    {ErrorCode::kSchemaViolation, "SchemaViolation"},
    {ErrorCode::kUnknownFixtureRef, "UnknownFixtureRef"},
    {ErrorCode::kCorruptTranscript, "CorruptTranscript"},
    {ErrorCode::kInvalidArgument, "InvalidArgument"},
    {ErrorCode::kIoError, "IoError"},
}};

}  // namespace

std::string_view ErrorCodeName(ErrorCode code) {
  for (const auto& [c, name] : kNames) {
    if (c == code) return name;
  }
  return "Unknown";
}

std::optional<ErrorCode> ErrorCodeFromName(std::string_view name) {
  for (const auto& [c, n] : kNames) {
    if (n == name) return c;
  }
  return std::nullopt;
}

std::string Error::ToString() const {
  std::string out(ErrorCodeName(code));
  if (!subject.empty()) out += "(" + subject + ")";
  if (index >= 0) out += "#" + std::to_string(index);
  if (!message.empty()) out += ": " + message;
  if (cause) out += " <- " + cause->ToString();
  return out;
}

bool operator==(const Error& a, const Error& b) {
  if (a.code != b.code || a.message != b.message || a.subject != b.subject ||
      a.index != b.index) {
    return false;
  }
  if (static_cast<bool>(a.cause) != static_cast<bool>(b.cause)) return false;
  return !a.cause || *a.cause == *b.cause;
}

}  // namespace toolplan
