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

#include "toolplan/agents.h"

#include <chrono>
#include <functional>
#include <set>

namespace toolplan {
namespace {

using Parser = std::function<Result<PlannerDecision>(std::string_view)>;
// Adjusts the slots of a retry; `feedback` is the Error-slot text.
using FeedbackFn = std::function<void(SlotMap& slots, const std::string& feedback)>;

const std::set<std::string, std::less<>>& AgentTemplates() {
  static const std::set<std::string, std::less<>> ids = {"agent-onestep", "agent-onestep-zh",
                                                         "agent-sequential-react"};
  return ids;
}

void ErrorSlotFeedback(SlotMap& slots, const std::string& feedback) { slots["error"] = feedback; }

struct PlannerOutput {
  PlannerDecision decision;
  std::string completion;
};

// One planner turn with parse retries. Exhausted retries come back as
// `exhausted_code` caused by RetriesExhausted.
Result<PlannerOutput> PlannerTurn(const AgentEnv& env, const AgentConfig& config,
                                  const std::string& template_id, const SlotMap& base_slots,
                                  const FeedbackFn& feedback, const Parser& parse,
                                  ErrorCode exhausted_code, Transcript* transcript,
                                  const std::vector<std::string>& stop = {}) {
  auto attempt = [&](const std::string& error_slot,
                     AttemptOutcome* outcome) -> Result<PlannerOutput> {
    SlotMap slots = base_slots;
    if (error_slot != kNoError) feedback(slots, error_slot);
    auto rendered = env.prompts->Render(template_id, slots);
    if (!rendered.ok()) {
      outcome->retryable = false;
      return rendered.take_error();
    }
    CompletionRequest request;
    if (AgentTemplates().count(template_id) > 0) {
      auto [system, user] = SplitAgentPrompt(*rendered);
      request = config.toolbox.model.Request(std::move(system), std::move(user));
    } else {
      request = config.toolbox.model.Request("", *rendered);
    }
    request.stop_sequences = stop;
    const auto start = std::chrono::steady_clock::now();
    TurnRecord turn;
    turn.role = TurnRole::kPlanner;
    turn.prompt = request.CombinedPrompt();
    auto finish = [&](Json decision) {
      turn.decision = std::move(decision);
      turn.wall_time = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::steady_clock::now() - start);
      transcript->Append(std::move(turn));
    };
    auto completion = env.provider->Complete(request);
    if (!completion.ok()) {
      outcome->retryable = false;
      finish(TurnRecord::Failure(completion.error()));
      return completion.take_error();
    }
    turn.completion = completion->text;
    auto decision = parse(completion->text);
    if (!decision.ok()) {
      outcome->failed_output = completion->text;
      finish(TurnRecord::Failure(decision.error()));
      return decision.take_error();
    }
    finish(DecisionToJson(*decision));
    return PlannerOutput{std::move(*decision), completion->text};
  };
  auto r = RetryWithError<PlannerOutput>(config.toolbox.max_retries, attempt);
  if (!r.ok() && r.error().code == ErrorCode::kRetriesExhausted) {
    return Error(exhausted_code, "planner output could not be parsed", template_id)
        .WithCause(r.take_error());
  }
  return r;
}

void FailRun(AgentRun& run, Error e) {
  run.transcript.Fail(e);
  run.status = std::move(e);
}

void FinishRun(AgentRun& run, std::string answer) {
  (void)run.transcript.SetFinalAnswer(std::move(answer));
  run.transcript.Succeed();
}

Status CheckEnv(const AgentEnv& env, std::string_view question) {
  if (env.provider == nullptr || env.prompts == nullptr) {
    return Error(ErrorCode::kInvalidArgument, "agent needs a provider and a prompt library");
  }
  if (Trim(question).empty()) return Error(ErrorCode::kInvalidArgument, "question is empty");
  return Status::Ok();
}

Toolbox MakeToolbox(const AgentEnv& env, const AgentConfig& config, Transcript* transcript) {
  ToolContext ctx;
  ctx.provider = env.provider;
  ctx.prompts = env.prompts;
  ctx.db = env.db;
  ctx.sandbox = env.sandbox;
  ctx.transcript = transcript;
  return Toolbox(ctx, config.toolbox);
}

Parser PairParser() {
  return [](std::string_view text) -> Result<PlannerDecision> {
    TOOLPLAN_ASSIGN_OR_RETURN(PairList p, ParsePairList(text));
    return PlannerDecision(std::move(p));
  };
}

// Text after "Final Answer:" when the completion starts with that label.
std::string StripFinalAnswerLabel(std::string_view text) {
  std::string t = Trim(text);
  const std::string lower = ToLower(t.substr(0, 13));
  if (lower.rfind("final answer", 0) == 0 || lower.rfind("final_answer", 0) == 0) {
    size_t colon = t.find(':');
    if (colon != std::string::npos && colon < 16) return Trim(std::string_view(t).substr(colon + 1));
  }
  return t;
}

// The model's own Result line following its Tool_Query, if any.
std::string EchoedResult(std::string_view completion) {
  bool after_query = false;
  size_t pos = 0;
  while (pos <= completion.size()) {
    size_t nl = completion.find('\n', pos);
    std::string line = Trim(completion.substr(pos, nl == std::string_view::npos ? nl : nl - pos));
    const std::string lower = ToLower(line);
    if (lower.rfind("tool_query", 0) == 0 || line.rfind("{", 0) == 0) after_query = true;
    if (after_query && lower.rfind("result", 0) == 0) {
      size_t colon = line.find(':');
      return colon == std::string::npos ? "" : Trim(std::string_view(line).substr(colon + 1));
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return "";
}

std::string HistoryWithError(const std::string& history, const std::string& feedback) {
  return history + (history.empty() ? "" : "\n") + "Error: " + feedback;
}

}  // namespace

std::string_view AnswerModeName(AnswerMode m) {
  switch (m) {
    case AnswerMode::kSummarize:
      return "summarize";
    case AnswerMode::kLastResult:
      return "last-result";
    case AnswerMode::kCollect:
      return "collect";
  }
  return "last-result";
}

Result<AnswerMode> AnswerModeFromName(std::string_view name) {
  for (AnswerMode m : {AnswerMode::kSummarize, AnswerMode::kLastResult, AnswerMode::kCollect}) {
    if (AnswerModeName(m) == name) return m;
  }
  return Error(ErrorCode::kInvalidArgument,
               "unknown answer mode; expected summarize, last-result or collect",
               std::string(name));
}

std::string_view PlanModeName(PlanMode m) {
  switch (m) {
    case PlanMode::kToolOrder:
      return "tool-order";
    case PlanMode::kDualLists:
      return "dual-lists";
    case PlanMode::kPairs:
      return "pairs";
    case PlanMode::kPairsWithDistractors:
      return "pairs-distractors";
    case PlanMode::kSaPairs:
      return "sa-pairs";
  }
  return "pairs";
}

Result<PlanMode> PlanModeFromName(std::string_view name) {
  for (PlanMode m : {PlanMode::kToolOrder, PlanMode::kDualLists, PlanMode::kPairs,
                     PlanMode::kPairsWithDistractors, PlanMode::kSaPairs}) {
    if (PlanModeName(m) == name) return m;
  }
  return Error(ErrorCode::kInvalidArgument, "unknown planning mode", std::string(name));
}

std::string_view PlanModeTemplate(PlanMode m) {
  switch (m) {
    case PlanMode::kToolOrder:
      return "tool-order";
    case PlanMode::kDualLists:
      return "tool-order-plus-subtasks";
    case PlanMode::kPairs:
      return "paired-oa";
    case PlanMode::kPairsWithDistractors:
      return "paired-oa-distractors";
    case PlanMode::kSaPairs:
      return "paired-sa";
  }
  return "paired-oa";
}

std::pair<std::string, std::string> SplitAgentPrompt(std::string_view rendered) {
  size_t question = std::string_view::npos;
  for (size_t pos = 0; pos < rendered.size();) {
    if (rendered.substr(pos, 9) == "Question:") question = pos;
    size_t nl = rendered.find('\n', pos);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (question == std::string_view::npos || question == 0) return {"", std::string(rendered)};
  size_t blank = rendered.substr(0, question).rfind("\n\n");
  if (blank == std::string_view::npos) return {"", std::string(rendered)};
  return {Trim(rendered.substr(0, blank)), std::string(rendered.substr(blank + 2))};
}

std::vector<PlanStep> PlannedSteps(const std::vector<PlannerDecision>& decisions) {
  std::vector<PlanStep> out;
  for (const PlannerDecision& d : decisions) {
    if (const auto* pairs = std::get_if<PairList>(&d)) {
      out.insert(out.end(), pairs->steps.begin(), pairs->steps.end());
    } else if (const auto* dual = std::get_if<ToolAndSubtaskLists>(&d)) {
      for (size_t i = 0; i < std::min(dual->tools.size(), dual->subtasks.size()); ++i) {
        out.push_back({dual->tools[i], dual->subtasks[i]});
      }
    } else if (const auto* q = std::get_if<StepwiseQuery>(&d)) {
      out.push_back(q->step);
    } else if (const auto* list = std::get_if<ToolList>(&d)) {
      for (const std::string& t : list->tools) out.push_back({t, ""});
    } else if (const auto* act = std::get_if<ReactAct>(&d)) {
      out.push_back({act->action, act->action_input});
    }
  }
  return out;
}

AgentRun RunOneStep(std::string_view question, const AgentEnv& env, const AgentConfig& config,
                    Toolset toolset) {
  AgentRun run;
  run.transcript = Transcript(std::string(question));
  run.transcript.set_answer_mode(std::string(AnswerModeName(config.answer_mode)));
  if (Status s = CheckEnv(env, question); !s.ok()) {
    FailRun(run, s.error());
    return run;
  }
  const std::string template_id =
      toolset == Toolset::kBase ? config.onestep_template : "paired-oa-distractors";
  auto planned = PlannerTurn(env, config, template_id,
                             {{"question", std::string(question)}, {"error", std::string(kNoError)}},
                             ErrorSlotFeedback, PairParser(), ErrorCode::kPlanningParseFailure,
                             &run.transcript);
  if (!planned.ok()) {
    FailRun(run, planned.take_error());
    return run;
  }
  run.decisions.push_back(planned->decision);
  const std::vector<PlanStep> plan = std::get<PairList>(planned->decision).steps;
  if (plan.empty()) {
    FailRun(run, Error(ErrorCode::kEmptyPlan, "planner returned no steps"));
    return run;
  }

  Toolbox toolbox = MakeToolbox(env, config, &run.transcript);
  std::vector<std::pair<PlanStep, std::string>> done;
  for (size_t i = 0; i < plan.size(); ++i) {
    auto result = toolbox.Invoke(plan[i], RenderHistory(done));
    if (!result.ok()) {
      FailRun(run, Error(ErrorCode::kStepFailure, "step failed", plan[i].tool)
                       .WithIndex(static_cast<int64_t>(i))
                       .WithCause(result.take_error()));
      return run;
    }
    ++run.tool_invocations;
    done.emplace_back(plan[i], result->text);
  }

  switch (config.answer_mode) {
    case AnswerMode::kLastResult:
      FinishRun(run, done.back().second);
      break;
    case AnswerMode::kCollect: {
      std::string all;
      for (size_t i = 0; i < done.size(); ++i) all += (i > 0 ? "\n" : "") + done[i].second;
      FinishRun(run, all);
      break;
    }
    case AnswerMode::kSummarize: {
      auto prompt = env.prompts->Render(
          "summarize", {{"question", std::string(question)}, {"history", RenderHistory(done)}});
      if (!prompt.ok()) {
        FailRun(run, prompt.take_error());
        return run;
      }
      const auto start = std::chrono::steady_clock::now();
      TurnRecord turn;
      turn.role = TurnRole::kSummarizer;
      turn.prompt = *prompt;
      auto c = env.provider->Complete(config.toolbox.model.Request("", *prompt));
      turn.wall_time = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::steady_clock::now() - start);
      if (!c.ok()) {
        turn.result = TurnRecord::Failure(c.error());
        run.transcript.Append(std::move(turn));
        FailRun(run, c.take_error());
        return run;
      }
      turn.completion = c->text;
      std::string answer = StripFinalAnswerLabel(c->text);
      turn.result = TurnRecord::Value(answer);
      run.transcript.Append(std::move(turn));
      if (answer.empty()) {
        FailRun(run, Error(ErrorCode::kFinalWithoutAnswer, "summary is empty"));
        return run;
      }
      FinishRun(run, answer);
      break;
    }
  }
  return run;
}

namespace {

void RunStepwise(std::string_view question, const AgentEnv& env, const AgentConfig& config,
                 AgentRun& run) {
  Toolbox toolbox = MakeToolbox(env, config, &run.transcript);
  std::vector<std::pair<PlanStep, std::string>> done;
  Parser parse = [](std::string_view text) { return ParseStepwise(text); };
  for (int turn = 0; turn < config.max_steps; ++turn) {
    const std::string history = RenderHistory(done);
    auto planned = PlannerTurn(
        env, config, "paired-sa", {{"question", std::string(question)}, {"history", history}},
        [&history](SlotMap& slots, const std::string& fb) {
          slots["history"] = HistoryWithError(history, fb);
        },
        parse, ErrorCode::kTurnParseFailure, &run.transcript);
    if (!planned.ok()) {
      FailRun(run, planned.take_error());
      return;
    }
    run.decisions.push_back(planned->decision);
    if (const auto* final = std::get_if<StepwiseFinal>(&planned->decision)) {
      FinishRun(run, final->answer);
      return;
    }
    const PlanStep& step = std::get<StepwiseQuery>(planned->decision).step;
    auto result = toolbox.Invoke(step, history);
    if (!result.ok()) {
      FailRun(run, result.take_error());
      return;
    }
    ++run.tool_invocations;
    done.emplace_back(step, result->text);
  }
  FailRun(run, Error(ErrorCode::kStepLimitExceeded,
                     "no final answer after " + std::to_string(config.max_steps) + " turns"));
}

void RunReact(std::string_view question, const AgentEnv& env, const AgentConfig& config,
              AgentRun& run) {
  Toolbox toolbox = MakeToolbox(env, config, &run.transcript);
  const std::string tool_names = "Python REPL, SQL Generator";
  Parser parse = [](std::string_view text) -> Result<PlannerDecision> {
    TOOLPLAN_ASSIGN_OR_RETURN(PlannerDecision d, ParseReact(text));
    if (const auto* act = std::get_if<ReactAct>(&d)) {
      if (act->action != kCodeGenerator && act->action != kSqlGenerator) {
        return Error(ErrorCode::kTurnParseFailure, "action is not an available tool", act->action);
      }
    }
    return d;
  };
  std::string scratchpad;
  for (int turn = 0; turn < config.max_steps; ++turn) {
    const std::string pad = scratchpad;
    auto planned = PlannerTurn(
        env, config, "agent-sequential-react",
        {{"input", std::string(question)}, {"agent_scratchpad", pad}, {"tool_names", tool_names}},
        [&pad](SlotMap& slots, const std::string& fb) {
          slots["agent_scratchpad"] = pad + "\nObservation: Error: " + fb + "\nThought:";
        },
        parse, ErrorCode::kTurnParseFailure, &run.transcript, {"\nObservation:"});
    if (!planned.ok()) {
      FailRun(run, planned.take_error());
      return;
    }
    run.decisions.push_back(planned->decision);
    if (const auto* final = std::get_if<ReactFinal>(&planned->decision)) {
      FinishRun(run, final->answer);
      return;
    }
    const ReactAct& act = std::get<ReactAct>(planned->decision);
    std::string observation;
    if (act.action == kCodeGenerator) {
      if (env.sandbox == nullptr) {
        FailRun(run, Error(ErrorCode::kInvalidArgument, "the Python action needs a sandbox"));
        return;
      }
      const auto start = std::chrono::steady_clock::now();
      TurnRecord t;
      t.role = TurnRole::kTool;
      t.decision = Json{{"tool", std::string(kCodeGenerator)}, {"statement", act.action_input}};
      auto out = env.sandbox->RunStatement(act.action_input);
      t.wall_time = std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::steady_clock::now() - start);
      if (!out.ok()) {
        t.result = TurnRecord::Failure(out.error());
        run.transcript.Append(std::move(t));
        if (out.error().code == ErrorCode::kSandboxSpawnFailure ||
            out.error().code == ErrorCode::kInvalidArgument) {
          FailRun(run, Error(ErrorCode::kToolChainFailure, "statement could not run", "execute")
                           .WithCause(out.take_error()));
          return;
        }
        // The model sees interpreter errors and may correct itself.
        observation = "Error: " + out.error().ToString();
      } else {
        observation = *out;
        t.result = TurnRecord::Value(observation);
        run.transcript.Append(std::move(t));
        ++run.tool_invocations;
      }
    } else {
      auto out = toolbox.Invoke({act.action, act.action_input}, "");
      if (!out.ok()) {
        FailRun(run, out.take_error());
        return;
      }
      observation = out->text;
      ++run.tool_invocations;
    }
    std::string said = planned->completion;
    size_t cut = said.find("\nObservation");
    if (cut != std::string::npos) said.resize(cut);
    while (!said.empty() && (said.back() == '\n' || said.back() == ' ')) said.pop_back();
    scratchpad += (said.empty() || said.front() == ' ' ? "" : " ") + said + "\nObservation: " +
                  observation + "\nThought:";
  }
  FailRun(run, Error(ErrorCode::kStepLimitExceeded,
                     "no final answer after " + std::to_string(config.max_steps) + " turns"));
}

}  // namespace

AgentRun RunSequential(std::string_view question, const AgentEnv& env, const AgentConfig& config,
                       SequentialGrammar grammar) {
  AgentRun run;
  run.transcript = Transcript(std::string(question));
  run.transcript.set_answer_mode(std::string(kModelFinalAnswer));
  if (Status s = CheckEnv(env, question); !s.ok()) {
    FailRun(run, s.error());
    return run;
  }
  if (config.max_steps < 1) {
    FailRun(run, Error(ErrorCode::kInvalidArgument, "max_steps must be at least 1"));
    return run;
  }
  if (grammar == SequentialGrammar::kStepwise) {
    RunStepwise(question, env, config, run);
  } else {
    RunReact(question, env, config, run);
  }
  return run;
}

AgentRun PlanOnly(std::string_view question, PlanMode mode, const AgentEnv& env,
                  const AgentConfig& config, const std::vector<std::string>& fed_results) {
  AgentRun run;
  run.transcript = Transcript(std::string(question));
  run.transcript.set_answer_mode("plan-only");
  if (Status s = CheckEnv(env, question); !s.ok()) {
    FailRun(run, s.error());
    return run;
  }
  const std::string template_id(PlanModeTemplate(mode));
  if (mode != PlanMode::kSaPairs) {
    Parser parse;
    switch (mode) {
      case PlanMode::kToolOrder:
        parse = [](std::string_view t) -> Result<PlannerDecision> {
          TOOLPLAN_ASSIGN_OR_RETURN(ToolList l, ParseToolList(t));
          return PlannerDecision(std::move(l));
        };
        break;
      case PlanMode::kDualLists:
        parse = [](std::string_view t) -> Result<PlannerDecision> {
          TOOLPLAN_ASSIGN_OR_RETURN(ToolAndSubtaskLists l, ParseDualLists(t));
          return PlannerDecision(std::move(l));
        };
        break;
      default:
        parse = PairParser();
    }
    auto planned = PlannerTurn(env, config, template_id,
                               {{"question", std::string(question)}, {"error", std::string(kNoError)}},
                               ErrorSlotFeedback, parse, ErrorCode::kPlanningParseFailure,
                               &run.transcript);
    if (!planned.ok()) {
      FailRun(run, planned.take_error());
      return run;
    }
    run.decisions.push_back(planned->decision);
    run.transcript.Succeed();
    return run;
  }

  std::vector<std::pair<PlanStep, std::string>> done;
  Parser parse = [](std::string_view text) { return ParseStepwise(text); };
  for (int turn = 0; turn < config.max_steps; ++turn) {
    const std::string history = RenderHistory(done);
    auto planned = PlannerTurn(
        env, config, template_id, {{"question", std::string(question)}, {"history", history}},
        [&history](SlotMap& slots, const std::string& fb) {
          slots["history"] = HistoryWithError(history, fb);
        },
        parse, ErrorCode::kTurnParseFailure, &run.transcript);
    if (!planned.ok()) {
      FailRun(run, planned.take_error());
      return run;
    }
    run.decisions.push_back(planned->decision);
    if (const auto* final = std::get_if<StepwiseFinal>(&planned->decision)) {
      FinishRun(run, final->answer);
      return run;
    }
    const size_t k = done.size();
    std::string fed;
    if (config.sa_feed == ResultFeed::kGold) {
      fed = k < fed_results.size() ? fed_results[k] : "";
    } else {
      fed = EchoedResult(planned->completion);
    }
    done.emplace_back(std::get<StepwiseQuery>(planned->decision).step, fed);
  }
  FailRun(run, Error(ErrorCode::kStepLimitExceeded,
                     "no final answer after " + std::to_string(config.max_steps) + " turns"));
  return run;
}

}  // namespace toolplan
