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

// Prompt templates with {{slot}} markers, loaded from a manifest.

#ifndef TOOLPLAN_PROMPT_ENGINE_H_
#define TOOLPLAN_PROMPT_ENGINE_H_

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "toolplan/core_model.h"
#include "toolplan/result.h"
#include "toolplan/sql_workbench.h"

namespace toolplan {

// A completion embedded in a template body, with the value its grammar
// must produce. `grammar` is one of tool_list, dual_lists, pairs, stepwise,
// react, sql_query, sql_answer, solution_code.
struct TemplateDemo {
  std::string grammar;
  std::string text;
  Json expected;
};

struct PromptTemplate {
  std::string id;
  std::string body;
  std::vector<std::string> slots;
  bool reconstructed = false;
  std::vector<TemplateDemo> demos;
};

using SlotMap = std::map<std::string, std::string>;

class PromptLibrary {
 public:
  // Reads <dir>/manifest.json and the template files it names.
  static Result<PromptLibrary> Load(const std::filesystem::path& dir);
  // Loaded once from DataDir()/prompts.
  static Result<std::shared_ptr<const PromptLibrary>> Shared();

  const PromptTemplate* Find(std::string_view id) const;
  std::vector<std::string> ids() const;

  // Substitutes every slot exactly once; values are never re-scanned.
  // Errors: UnknownTemplate, MissingSlot, UnknownSlot.
  Result<std::string> Render(std::string_view id, const SlotMap& slots) const;

 private:
  std::vector<PromptTemplate> templates_;
};

// Slot markers ("{{name}}") in `body`, in order of first appearance.
std::vector<std::string> SlotMarkers(std::string_view body);

// "The Tool_Query for the first tool execution was:{...}, Result:..." lines.
std::string RenderHistory(const std::vector<std::pair<PlanStep, std::string>>& steps);

// {"PythonREPL": "subtask"} as it appears inside prompts.
std::string RenderToolQuery(const PlanStep& step);

// CREATE TABLE clauses, each followed by up to `sample_rows` leading rows in
// a comment block. Errors: EmptyFixture.
Result<std::string> RenderSchemaBlock(const Database& db,
                                      int sample_rows = Database::kMaxSampleRows);

inline constexpr std::string_view kNoError = "None";

}  // namespace toolplan

#endif  // TOOLPLAN_PROMPT_ENGINE_H_
