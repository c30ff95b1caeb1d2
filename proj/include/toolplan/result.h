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

#ifndef TOOLPLAN_RESULT_H_
#define TOOLPLAN_RESULT_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace toolplan {

// Every failure the library can report. Grouped by the module that raises it.
enum class ErrorCode {
  // prompt engine
  kMissingSlot,
  kUnknownSlot,
  kUnknownTemplate,
  kEmptyFixture,
  // response parsers
  kMissingField,
  kMalformedList,
  kMalformedDict,
  kMultiKeyEntry,
  kFinalWithoutAnswer,
  kMissingAction,
  kMissingActionInput,
  kMultipleStatements,
  kEmptyStatement,
  kNoSolutionFunction,
  // llm gateway
  kInvalidRequest,
  kTimeout,
  kRateLimited,
  kAuthFailure,
  kTransportError,
  kScriptExhausted,
  kPromptMismatch,
  kSessionBusy,
  kEmptyTranscript,
  // sql workbench
  kUnknownFixture,
  kNotASelect,
  kSqlError,
  kConstraintUnsatisfiable,
  // code sandbox
  kRuntimeError,
  kSerializationError,
  kSandboxSpawnFailure,
  // toolbox
  kUnsupportedTool,
  kToolChainFailure,
  kRetriesExhausted,
  // agents
  kPlanningParseFailure,
  kStepFailure,
  kEmptyPlan,
  kStepLimitExceeded,
  kTurnParseFailure,
  // evalkit / io
  kSchemaViolation,
  kUnknownFixtureRef,
  kCorruptTranscript,
  kInvalidArgument,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);
std::optional<ErrorCode> ErrorCodeFromName(std::string_view name);

// A typed failure. `subject` names the slot, field, stage or path involved;
// `index` carries a line or step number when one applies.
struct Error {
  ErrorCode code;
  std::string message;
  std::string subject;
  int64_t index = -1;
  std::shared_ptr<const Error> cause;

  Error(ErrorCode c, std::string msg) : code(c), message(std::move(msg)) {}
  Error(ErrorCode c, std::string msg, std::string subj)
      : code(c), message(std::move(msg)), subject(std::move(subj)) {}

  Error& WithIndex(int64_t i) & {
    index = i;
    return *this;
  }
  Error&& WithIndex(int64_t i) && {
    index = i;
    return std::move(*this);
  }
  Error&& WithCause(Error c) && {
    cause = std::make_shared<const Error>(std::move(c));
    return std::move(*this);
  }

  // Innermost error along the cause chain.
  const Error& Root() const { return cause ? cause->Root() : *this; }

  // "Code(subject)#index: message <- cause..."
  std::string ToString() const;
};

bool operator==(const Error& a, const Error& b);

template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : data_(std::move(value)) {}  // NOLINT
  Result(Error error) : data_(std::move(error)) {}  // NOLINT

  bool ok() const { return data_.index() == 0; }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return std::get<0>(data_); }
  T& value() & { return std::get<0>(data_); }
  T&& value() && { return std::get<0>(std::move(data_)); }

  const Error& error() const { return std::get<1>(data_); }
  Error&& take_error() { return std::get<1>(std::move(data_)); }

  const T& operator*() const& { return value(); }
  T& operator*() & { return value(); }
  const T* operator->() const { return &value(); }
  T* operator->() { return &value(); }

 private:
  std::variant<T, Error> data_;
};

// Result without a payload.
class [[nodiscard]] Status {
 public:
  Status() = default;
  Status(Error error) : error_(std::move(error)) {}  // NOLINT

  static Status Ok() { return Status(); }
  bool ok() const { return !error_.has_value(); }
  explicit operator bool() const { return ok(); }
  const Error& error() const { return *error_; }

 private:
  std::optional<Error> error_;
};

}  // namespace toolplan

#define TOOLPLAN_CONCAT_INNER_(a, b) a##b
#define TOOLPLAN_CONCAT_(a, b) TOOLPLAN_CONCAT_INNER_(a, b)

// Evaluates `expr` (a Result<T>); on error returns the error from the
// enclosing function, otherwise move-assigns the value to `lhs`.
#define TOOLPLAN_ASSIGN_OR_RETURN(lhs, expr)                           \
  auto TOOLPLAN_CONCAT_(_tp_result_, __LINE__) = (expr);               \
  if (!TOOLPLAN_CONCAT_(_tp_result_, __LINE__).ok())                   \
    return TOOLPLAN_CONCAT_(_tp_result_, __LINE__).take_error();       \
  lhs = std::move(TOOLPLAN_CONCAT_(_tp_result_, __LINE__)).value()

#define TOOLPLAN_RETURN_IF_ERROR(expr)                                 \
  do {                                                                 \
    auto _tp_status = (expr);                                          \
    if (!_tp_status.ok()) return _tp_status.error();                   \
  } while (0)

#endif  // TOOLPLAN_RESULT_H_
