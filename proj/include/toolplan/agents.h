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

// Agent control loops: one-step planning (plan everything, then execute),
// sequential planning (one tool call per turn, stepwise or ReAct), and
// planning without execution for evaluating plans alone.

#ifndef TOOLPLAN_AGENTS_H_
#define TOOLPLAN_AGENTS_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "toolplan/code_sandbox.h"
#include "toolplan/core_model.h"
#include "toolplan/llm_gateway.h"
#include "toolplan/prompt_engine.h"
#include "toolplan/response_parsers.h"
#include "toolplan/result.h"
#include "toolplan/sql_workbench.h"
#include "toolplan/toolbox.h"

namespace toolplan {

// How a one-step run turns step results into its final answer.
//   summarize:   one more completion over the question and history
//   last-result: the last step's result
//   collect:     every step's result, one per line
enum class AnswerMode { kSummarize, kLastResult, kCollect };
std::string_view AnswerModeName(AnswerMode m);
Result<AnswerMode> AnswerModeFromName(std::string_view name);

// Recorded as the answer mode of sequential runs, whose answer is the
// model's own final-answer line.
inline constexpr std::string_view kModelFinalAnswer = "final-answer";

enum class SequentialGrammar { kStepwise, kReact };

enum class Toolset { kBase, kWithDistractors };

enum class PlanMode { kToolOrder, kDualLists, kPairs, kPairsWithDistractors, kSaPairs };
std::string_view PlanModeName(PlanMode m);
Result<PlanMode> PlanModeFromName(std::string_view name);
std::string_view PlanModeTemplate(PlanMode m);

// Where sa-pairs planning gets its Result lines.
enum class ResultFeed { kGold, kEcho };

struct AgentConfig {
  ToolboxConfig toolbox;  // model settings, SQL variant, max_retries
  AnswerMode answer_mode = AnswerMode::kLastResult;
  int max_steps = 8;
  std::string onestep_template = "agent-onestep";  // or agent-onestep-zh
  ResultFeed sa_feed = ResultFeed::kGold;
};

// Non-owning handles shared by all runs.
struct AgentEnv {
  CompletionProvider* provider = nullptr;
  const PromptLibrary* prompts = nullptr;
  const Database* db = nullptr;  // may be null when no SQL step runs
  Sandbox* sandbox = nullptr;
};

struct AgentRun {
  Transcript transcript;
  Status status;                           // the typed error when the run failed
  std::vector<PlannerDecision> decisions;  // every parsed planner decision
  int tool_invocations = 0;                // tool calls that produced a result
  bool ok() const { return status.ok(); }
};

// Splits a rendered agent prompt into system and user turns. The user turn
// is the paragraph holding the last "Question:" line, plus what follows.
std::pair<std::string, std::string> SplitAgentPrompt(std::string_view rendered);

// Errors (in AgentRun::status): InvalidArgument, PlanningParseFailure,
// EmptyPlan, StepFailure(index) caused by the tool error, gateway errors.
AgentRun RunOneStep(std::string_view question, const AgentEnv& env, const AgentConfig& config,
                    Toolset toolset = Toolset::kBase);

// Errors: InvalidArgument, StepLimitExceeded, TurnParseFailure,
// ToolChainFailure, gateway errors.
AgentRun RunSequential(std::string_view question, const AgentEnv& env, const AgentConfig& config,
                       SequentialGrammar grammar);

// Plans without executing anything. For sa-pairs, `fed_results[k]` is the
// Result line after the k-th query when sa_feed is kGold; with kEcho the
// model's own Result line is fed back.
AgentRun PlanOnly(std::string_view question, PlanMode mode, const AgentEnv& env,
                  const AgentConfig& config, const std::vector<std::string>& fed_results = {});

// The planned steps in a decision sequence: pairs, dual lists (zipped up to
// the shorter list) and stepwise queries. Tool lists yield steps with empty
// subtasks.
std::vector<PlanStep> PlannedSteps(const std::vector<PlannerDecision>& decisions);

}  // namespace toolplan

#endif  // TOOLPLAN_AGENTS_H_
