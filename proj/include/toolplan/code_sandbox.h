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

// Runs generated code in a confined child process.
//
// The child gets its own process group, a fresh temporary working
// directory, resource limits, an empty network namespace and a Landlock
// ruleset that allows filesystem writes only below the temporary directory
// (and to /dev/null). If any of these cannot be applied the run fails with
// SandboxSpawnFailure rather than running unconfined.
//
// Protocol with the interpreter: the snippet arrives on standard input and
// the interpreter prints one line, "OK <value>" or "ERR <message>". In the
// value, "\n" and "\\" escape a newline and a backslash. Statement mode
// passes the extra argument "--statement" and expects the statement's
// printed output as the value.

#ifndef TOOLPLAN_CODE_SANDBOX_H_
#define TOOLPLAN_CODE_SANDBOX_H_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "toolplan/core_model.h"
#include "toolplan/result.h"

namespace toolplan {

struct SandboxPolicy {
  std::vector<std::string> interpreter_command;  // argv; [0] is looked up on PATH
  std::chrono::milliseconds wall_clock_limit{5000};
  int64_t memory_limit = int64_t{1} << 30;  // address space, bytes
  int64_t output_limit = int64_t{1} << 20;  // bytes kept per stream
  int max_workers = 4;                      // concurrent children per Sandbox

  // Errors: InvalidArgument.
  Status Validate() const;

  // Interpreter from TOOLPLAN_INTERPRETER (split on spaces) when set,
  // otherwise the canned-answer stub under DataDir()/sandbox.
  static SandboxPolicy Default();
};

// Raw outcome of one child run, before protocol decoding.
struct ChildOutput {
  std::string stdout_text;
  std::string stderr_text;
  int exit_code = -1;  // -1 when killed by a signal
  int term_signal = 0;
  bool timed_out = false;
};

// Decodes the last protocol line of `out`. Errors: RuntimeError (ERR line,
// or no line and an abnormal exit), SerializationError (no parseable line).
Result<std::string> DecodeProtocol(const ChildOutput& out);

// "[1, 2]" becomes a Sequence; anything else goes through AnswerValue::Infer.
AnswerValue ParseReturnValue(std::string_view value);

// Whether this kernel supports the confinement the sandbox needs.
bool SandboxSupported(std::string* why = nullptr);

class Sandbox {
 public:
  explicit Sandbox(SandboxPolicy policy);

  // Errors: Timeout, RuntimeError, SerializationError, SandboxSpawnFailure.
  Result<AnswerValue> RunSolution(std::string_view snippet);
  Result<std::string> RunStatement(std::string_view code_line);

  // Spawns the interpreter with `extra_args`, feeds `input` and collects
  // output. Errors: SandboxSpawnFailure, InvalidArgument.
  Result<ChildOutput> Spawn(std::string_view input, const std::vector<std::string>& extra_args);

  const SandboxPolicy& policy() const { return policy_; }

 private:
  SandboxPolicy policy_;
  std::mutex mu_;
  std::condition_variable cv_;
  int running_ = 0;
};

}  // namespace toolplan

#endif  // TOOLPLAN_CODE_SANDBOX_H_
