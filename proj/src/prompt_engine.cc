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

#include "toolplan/prompt_engine.h"

#include <algorithm>
#include <mutex>

namespace toolplan {
namespace {

bool IsIdentStart(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool IsIdent(char c) { return IsIdentStart(c) || (c >= '0' && c <= '9'); }

// Length of the marker starting at `pos` ("{{name}}"), or 0.
size_t MarkerAt(std::string_view body, size_t pos, std::string_view* name) {
  if (body.substr(pos, 2) != "{{") return 0;
  size_t i = pos + 2;
  if (i >= body.size() || !IsIdentStart(body[i])) return 0;
  while (i < body.size() && IsIdent(body[i])) ++i;
  if (body.substr(i, 2) != "}}") return 0;
  *name = body.substr(pos + 2, i - pos - 2);
  return i + 2 - pos;
}

std::string_view Ordinal(size_t n) {
  static constexpr std::string_view kWords[] = {"first", "second", "third", "fourth",
                                                "fifth", "sixth",  "seventh", "eighth",
                                                "ninth", "tenth"};
  return n < std::size(kWords) ? kWords[n] : std::string_view();
}

}  // namespace

std::vector<std::string> SlotMarkers(std::string_view body) {
  std::vector<std::string> out;
  for (size_t i = 0; i < body.size(); ++i) {
    std::string_view name;
    if (size_t len = MarkerAt(body, i, &name); len > 0) {
      if (std::find(out.begin(), out.end(), name) == out.end()) out.emplace_back(name);
      i += len - 1;
    }
  }
  return out;
}

Result<PromptLibrary> PromptLibrary::Load(const std::filesystem::path& dir) {
  TOOLPLAN_ASSIGN_OR_RETURN(std::string text, ReadFile(dir / "manifest.json"));
  Json manifest = Json::parse(text, nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("templates") ||
      !manifest["templates"].is_array()) {
    return Error(ErrorCode::kSchemaViolation, "malformed prompt manifest",
                 (dir / "manifest.json").string());
  }
  PromptLibrary lib;
  try {
    for (const Json& entry : manifest["templates"]) {
      PromptTemplate t;
      t.id = entry.at("id").get<std::string>();
      t.slots = entry.at("slots").get<std::vector<std::string>>();
      t.reconstructed = entry.value("reconstructed", false);
      TOOLPLAN_ASSIGN_OR_RETURN(t.body, ReadFile(dir / entry.at("file").get<std::string>()));
      // Files end with a newline; the prompt ends where the model continues.
      if (!t.body.empty() && t.body.back() == '\n') t.body.pop_back();
      for (const Json& d : entry.value("demos", Json::array())) {
        t.demos.push_back({d.at("grammar").get<std::string>(), d.at("text").get<std::string>(),
                           d.at("expected")});
      }
      std::vector<std::string> declared = t.slots;
      std::vector<std::string> found = SlotMarkers(t.body);
      std::sort(declared.begin(), declared.end());
      std::sort(found.begin(), found.end());
      if (declared != found) {
        return Error(ErrorCode::kSchemaViolation, "declared slots differ from the body", t.id);
      }
      lib.templates_.push_back(std::move(t));
    }
  } catch (const Json::exception& e) {
    return Error(ErrorCode::kSchemaViolation, e.what(), (dir / "manifest.json").string());
  }
  return lib;
}

Result<std::shared_ptr<const PromptLibrary>> PromptLibrary::Shared() {
  static std::mutex mu;
  static std::shared_ptr<const PromptLibrary> cached;
  std::lock_guard<std::mutex> lock(mu);
  if (cached == nullptr) {
    TOOLPLAN_ASSIGN_OR_RETURN(PromptLibrary lib, Load(DataDir() / "prompts"));
    cached = std::make_shared<const PromptLibrary>(std::move(lib));
  }
  return cached;
}

const PromptTemplate* PromptLibrary::Find(std::string_view id) const {
  for (const PromptTemplate& t : templates_) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

std::vector<std::string> PromptLibrary::ids() const {
  std::vector<std::string> out;
  for (const PromptTemplate& t : templates_) out.push_back(t.id);
  return out;
}

Result<std::string> PromptLibrary::Render(std::string_view id, const SlotMap& slots) const {
  const PromptTemplate* t = Find(id);
  if (t == nullptr) return Error(ErrorCode::kUnknownTemplate, "no such template", std::string(id));
  for (const std::string& s : t->slots) {
    if (slots.find(s) == slots.end()) return Error(ErrorCode::kMissingSlot, "slot not provided", s);
  }
  for (const auto& [name, value] : slots) {
    if (std::find(t->slots.begin(), t->slots.end(), name) == t->slots.end()) {
      return Error(ErrorCode::kUnknownSlot, "template " + t->id + " has no such slot", name);
    }
  }
  std::string out;
  const std::string_view body = t->body;
  size_t i = 0;
  while (i < body.size()) {
    std::string_view name;
    if (size_t len = MarkerAt(body, i, &name); len > 0) {
      out += slots.at(std::string(name));
      i += len;
    } else {
      out.push_back(body[i++]);
    }
  }
  return out;
}

std::string RenderToolQuery(const PlanStep& step) {
  auto quote = [](const std::string& s) {
    return Json(s).dump(-1, ' ', false, Json::error_handler_t::replace);
  };
  return "{" + quote(SurfaceToolName(step.tool)) + ": " + quote(step.subtask) + "}";
}

std::string RenderHistory(const std::vector<std::pair<PlanStep, std::string>>& steps) {
  std::string out;
  for (size_t i = 0; i < steps.size(); ++i) {
    if (i > 0) out += "\n";
    std::string_view word = Ordinal(i);
    const std::string ordinal = word.empty() ? std::to_string(i + 1) + "th" : std::string(word);
    out += "The Tool_Query for the " + ordinal + " tool execution was:" +
           RenderToolQuery(steps[i].first) + ", Result:" + steps[i].second;
  }
  return out;
}

Result<std::string> RenderSchemaBlock(const Database& db, int sample_rows) {
  if (db.tables().empty()) {
    return Error(ErrorCode::kEmptyFixture, "fixture has no tables", db.fixture_id());
  }
  std::string out;
  for (size_t t = 0; t < db.tables().size(); ++t) {
    const TableSummary& table = db.tables()[t];
    if (t > 0) out += "\n\n";
    TableDef def{table.name, table.columns, {}};
    out += TableDdl(def);
    if (sample_rows <= 0) continue;
    const size_t n = std::min(table.sample_rows.size(), static_cast<size_t>(sample_rows));
    out += "\n\n/*\n" + std::to_string(n) + " rows from " + ToLower(table.name) + " table:\n";
    for (size_t c = 0; c < table.columns.size(); ++c) {
      out += (c > 0 ? "\t" : "") + table.columns[c].name;
    }
    for (size_t r = 0; r < n; ++r) {
      out += "\n";
      for (size_t c = 0; c < table.sample_rows[r].size(); ++c) {
        out += (c > 0 ? "\t" : "") + CellToText(table.sample_rows[r][c]);
      }
    }
    out += "\n*/";
  }
  return out;
}

}  // namespace toolplan
