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

#include "toolplan/core_model.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#ifndef TOOLPLAN_DEFAULT_DATA_DIR
#define TOOLPLAN_DEFAULT_DATA_DIR "data"
#endif

namespace toolplan {
namespace {

// Lowercases ASCII letters and drops ASCII punctuation and whitespace.
// Bytes >= 0x80 are kept so that non-Latin names survive.
std::string NormalizeToolKey(std::string_view s) {
  std::string key;
  for (unsigned char c : s) {
    if (c >= 0x80) {
      key.push_back(static_cast<char>(c));
    } else if (std::isalnum(c)) {
      key.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  return key;
}

const std::map<std::string, std::string>& AliasTable() {
  static const auto* table = new std::map<std::string, std::string>{
      {"sqlgenerator", "sql-generator"},
      {"sql", "sql-generator"},
      {"sqlgen", "sql-generator"},
      {"sql生成器", "sql-generator"},
      {"codegenerator", "code-generator"},
      {"pythongenerator", "code-generator"},
      {"pythonrepl", "code-generator"},
      {"python", "code-generator"},
      {"python生成器", "code-generator"},
      {"weatherquerytool", "weather-query-tool"},
      {"weatherquery", "weather-query-tool"},
      {"imagegenerator", "image-generator"},
      {"textextractor", "text-extractor"},
      {"translator", "translator"},
      {"bingsearcher", "bing-searcher"},
      {"shellgenerator", "shell-generator"},
      {"javagenerator", "java-generator"},
      {"wikipediasearcher", "wikipedia-searcher"},
      {"officesoftware", "office-software"},
      {"officesuite", "office-software"},
      {"movieplayer", "movie-player"},
  };
  return *table;
}

}  // namespace

std::string Trim(std::string_view s) {
  const char* ws = " \t\r\n\f\v";
  const size_t b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return "";
  const size_t e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::string ToLower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string CanonicalizeToolName(std::string_view raw) {
  std::string trimmed = Trim(raw);
  const auto& table = AliasTable();
  auto it = table.find(NormalizeToolKey(trimmed));
  if (it != table.end()) return it->second;
  return trimmed;
}

std::string SurfaceToolName(std::string_view canonical) {
  if (canonical == kSqlGenerator) return "SQL Generator";
  if (canonical == kCodeGenerator) return "PythonREPL";
  static const ToolRegistry registry = ToolRegistry::Default();
  if (const ToolSpec* spec = registry.Find(canonical)) return spec->display_name;
  return std::string(canonical);
}

ToolRegistry ToolRegistry::Default() {
  ToolRegistry r;
  auto add = [&r](std::string name, std::string display, std::string desc, bool exec) {
    Status s = r.Add(ToolSpec{std::move(name), std::move(display), std::move(desc), exec});
    (void)s;
  };
  add("sql-generator", "SQL generator",
      "Given an input question and a database, create a syntactically correct "
      "SQLite query statement.",
      true);
  add("code-generator", "Python generator",
      "Given an input question and some information, generate a syntactically "
      "correct Python code.",
      true);
  add("weather-query-tool", "Weather query tool",
      "Given a location, output the current real-time weather at that location.", false);
  add("image-generator", "Image generator",
      "Given a text description, generate a related image.", false);
  add("text-extractor", "Text extractor",
      "Given a link to an image, extract the corresponding text and its position "
      "coordinates.",
      false);
  add("translator", "Translator",
      "Given a piece of text, translate it into other languages.", false);
  add("bing-searcher", "Bing Searcher",
      "Given a piece of text, conduct a search on the Bing browser and return content.",
      false);
  add("shell-generator", "Shell generator",
      "Given an input question and some information, generate a syntactically "
      "correct Shell code.",
      false);
  add("java-generator", "Java generator",
      "Given an input question and some information, generate a syntactically "
      "correct Java code.",
      false);
  add("wikipedia-searcher", "Wikipedia searcher",
      "Given a piece of text, conduct a search on Wikipedia and return content.", false);
  add("office-software", "Office software",
      "Given a text description, automatically generate corresponding long documents "
      "or spreadsheets or PPTs.",
      false);
  add("movie-player", "Movie player",
      "Given a movie name, automatically play the corresponding movie resources.", false);
  return r;
}

Status ToolRegistry::Add(ToolSpec spec) {
  if (Trim(spec.name).empty()) {
    return Error(ErrorCode::kInvalidArgument, "tool name is empty");
  }
  if (Trim(spec.description).empty()) {
    return Error(ErrorCode::kInvalidArgument, "tool description is empty", spec.name);
  }
  if (Find(spec.name) != nullptr) {
    return Error(ErrorCode::kInvalidArgument, "duplicate tool", spec.name);
  }
  specs_.push_back(std::move(spec));
  return Status::Ok();
}

const ToolSpec* ToolRegistry::Find(std::string_view name) const {
  const std::string canonical = CanonicalizeToolName(name);
  const std::string key = NormalizeToolKey(name);
  for (const ToolSpec& spec : specs_) {
    if (spec.name == canonical || NormalizeToolKey(spec.display_name) == key) {
      return &spec;
    }
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// AnswerValue

Result<AnswerValue> AnswerValue::ParseNumber(std::string_view printed) {
  std::string t = Trim(printed);
  size_t i = 0;
  if (i < t.size() && (t[i] == '+' || t[i] == '-')) ++i;
  const size_t int_begin = i;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
  if (i == int_begin) {
    return Error(ErrorCode::kInvalidArgument, "not a decimal literal: " + t);
  }
  int precision = 0;
  if (i < t.size() && t[i] == '.') {
    ++i;
    const size_t frac_begin = i;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
    precision = static_cast<int>(i - frac_begin);
    if (precision == 0) {
      return Error(ErrorCode::kInvalidArgument, "not a decimal literal: " + t);
    }
  }
  if (i != t.size()) {
    return Error(ErrorCode::kInvalidArgument, "not a decimal literal: " + t);
  }
  const char* begin = t.data() + (t[0] == '+' ? 1 : 0);
  double v = 0;
  auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    return Error(ErrorCode::kInvalidArgument, "not a decimal literal: " + t);
  }
  AnswerValue a;
  a.kind_ = Kind::kNumber;
  a.number_ = Number{v, precision, t};
  return a;
}

AnswerValue AnswerValue::FromNumberText(std::string_view printed) {
  auto r = ParseNumber(printed);
  if (!r.ok()) std::abort();
  return std::move(r).value();
}

AnswerValue AnswerValue::Text(std::string text) {
  AnswerValue a;
  a.kind_ = Kind::kText;
  a.text_ = std::move(text);
  return a;
}

AnswerValue AnswerValue::Set(std::vector<AnswerValue> items) {
  AnswerValue a;
  a.kind_ = Kind::kSet;
  a.items_ = std::move(items);
  return a;
}

AnswerValue AnswerValue::Sequence(std::vector<AnswerValue> items) {
  AnswerValue a;
  a.kind_ = Kind::kSequence;
  a.items_ = std::move(items);
  return a;
}

AnswerValue AnswerValue::Infer(std::string_view raw) {
  auto n = ParseNumber(raw);
  if (n.ok()) return std::move(n).value();
  return Text(std::string(raw));
}

bool AnswerValue::empty() const {
  switch (kind_) {
    case Kind::kNumber:
      return false;
    case Kind::kText:
      return Trim(text_).empty();
    case Kind::kSet:
    case Kind::kSequence:
      return items_.empty();
  }
  return true;
}

std::string AnswerValue::ToString() const {
  switch (kind_) {
    case Kind::kNumber:
      return number_.text;
    case Kind::kText:
      return text_;
    case Kind::kSet:
    case Kind::kSequence: {
      std::string out = kind_ == Kind::kSet ? "{" : "[";
      for (size_t i = 0; i < items_.size(); ++i) {
        if (i > 0) out += ", ";
        out += items_[i].ToString();
      }
      out += kind_ == Kind::kSet ? "}" : "]";
      return out;
    }
  }
  return "";
}

Json AnswerValue::ToJson() const {
  switch (kind_) {
    case Kind::kNumber:
      return Json{{"number", number_.text}};
    case Kind::kText:
      return Json{{"text", text_}};
    case Kind::kSet:
    case Kind::kSequence: {
      Json arr = Json::array();
      for (const auto& item : items_) arr.push_back(item.ToJson());
      return Json{{kind_ == Kind::kSet ? "set" : "sequence", arr}};
    }
  }
  return nullptr;
}

Result<AnswerValue> AnswerValue::FromJson(const Json& j) {
  if (!j.is_object() || j.size() != 1) {
    return Error(ErrorCode::kSchemaViolation,
                 "answer must be an object with one of number/text/set/sequence");
  }
  const auto& [key, val] = *j.items().begin();
  if (key == "number") {
    if (!val.is_string()) {
      return Error(ErrorCode::kSchemaViolation, "number must be given as printed text");
    }
    auto n = ParseNumber(val.get<std::string>());
    if (!n.ok()) return Error(ErrorCode::kSchemaViolation, n.error().message);
    return n;
  }
  if (key == "text") {
    if (!val.is_string()) return Error(ErrorCode::kSchemaViolation, "text must be a string");
    return Text(val.get<std::string>());
  }
  if (key == "set" || key == "sequence") {
    if (!val.is_array()) return Error(ErrorCode::kSchemaViolation, key + " must be an array");
    std::vector<AnswerValue> items;
    for (const auto& item : val) {
      auto parsed = FromJson(item);
      if (!parsed.ok()) return parsed;
      items.push_back(std::move(parsed).value());
    }
    return key == "set" ? Set(std::move(items)) : Sequence(std::move(items));
  }
  return Error(ErrorCode::kSchemaViolation, "unknown answer kind: " + key);
}

// ---------------------------------------------------------------------------
// QARecord

Json QARecord::ToJson() const {
  Json j{{"id", id},
         {"fixture", fixture},
         {"question", question},
         {"gold_answer", gold_answer.ToJson()},
         {"gold_tools", gold_tools}};
  if (sql_reference) j["sql_reference"] = *sql_reference;
  if (code_reference) j["code_reference"] = *code_reference;
  return j;
}

Result<QARecord> QARecord::FromJson(const Json& j, int64_t line) {
  auto violation = [line](std::string field, std::string msg) {
    return Error(ErrorCode::kSchemaViolation, std::move(msg), std::move(field)).WithIndex(line);
  };
  if (!j.is_object()) return violation("", "record must be an object");
  auto required_string = [&](const char* field) -> Result<std::string> {
    auto it = j.find(field);
    if (it == j.end()) return violation(field, "missing field");
    if (!it->is_string()) return violation(field, "must be a string");
    return it->get<std::string>();
  };
  QARecord r;
  TOOLPLAN_ASSIGN_OR_RETURN(r.id, required_string("id"));
  if (Trim(r.id).empty()) return violation("id", "must be non-empty");
  TOOLPLAN_ASSIGN_OR_RETURN(r.fixture, required_string("fixture"));
  TOOLPLAN_ASSIGN_OR_RETURN(r.question, required_string("question"));
  if (Trim(r.question).empty()) return violation("question", "must be non-empty");

  auto gold = j.find("gold_answer");
  if (gold == j.end()) return violation("gold_answer", "missing field");
  auto answer = AnswerValue::FromJson(*gold);
  if (!answer.ok()) return violation("gold_answer", answer.error().message);
  r.gold_answer = std::move(answer).value();
  if (r.gold_answer.empty()) return violation("gold_answer", "must be non-empty");

  if (auto tools = j.find("gold_tools"); tools != j.end()) {
    if (!tools->is_array()) return violation("gold_tools", "must be an array of strings");
    for (const auto& t : *tools) {
      if (!t.is_string()) return violation("gold_tools", "must be an array of strings");
      r.gold_tools.push_back(CanonicalizeToolName(t.get<std::string>()));
    }
  }
  for (const char* field : {"sql_reference", "code_reference"}) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) continue;
    if (!it->is_string()) return violation(field, "must be a string");
    (std::string_view(field) == "sql_reference" ? r.sql_reference : r.code_reference) =
        it->get<std::string>();
  }
  return r;
}

// ---------------------------------------------------------------------------
// Transcript

std::string_view TurnRoleName(TurnRole role) {
  switch (role) {
    case TurnRole::kPlanner:
      return "planner";
    case TurnRole::kTool:
      return "tool";
    case TurnRole::kSummarizer:
      return "summarizer";
  }
  return "planner";
}

Json ErrorToJson(const Error& e) {
  Json j{{"code", ErrorCodeName(e.code)}, {"message", e.message}};
  if (!e.subject.empty()) j["subject"] = e.subject;
  if (e.index >= 0) j["index"] = e.index;
  if (e.cause) j["cause"] = ErrorToJson(*e.cause);
  return j;
}

std::optional<Error> ErrorFromJson(const Json& j) {
  if (!j.is_object() || !j.contains("code") || !j["code"].is_string()) return std::nullopt;
  auto code = ErrorCodeFromName(j["code"].get<std::string>());
  if (!code) return std::nullopt;
  if (!j.value("message", Json("")).is_string() || !j.value("subject", Json("")).is_string() ||
      !j.value("index", Json(-1)).is_number_integer()) {
    return std::nullopt;
  }
  Error e(*code, j.value("message", ""), j.value("subject", ""));
  e.index = j.value("index", int64_t{-1});
  if (j.contains("cause")) {
    auto cause = ErrorFromJson(j["cause"]);
    if (!cause) return std::nullopt;
    e.cause = std::make_shared<const Error>(std::move(*cause));
  }
  return e;
}

Status Transcript::SetFinalAnswer(std::string answer) {
  if (final_answer_) {
    return Error(ErrorCode::kInvalidArgument, "final answer already set");
  }
  final_answer_ = std::move(answer);
  return Status::Ok();
}

size_t Transcript::CountRole(TurnRole role) const {
  return static_cast<size_t>(std::count_if(entries_.begin(), entries_.end(),
                                           [role](const TurnRecord& t) { return t.role == role; }));
}

Transcript Transcript::WithoutTimings() const {
  Transcript t = *this;
  for (TurnRecord& e : t.entries_) e.wall_time = std::chrono::microseconds(0);
  return t;
}

Json Transcript::ToJson() const {
  Json entries = Json::array();
  for (const TurnRecord& t : entries_) {
    entries.push_back(Json{{"role", TurnRoleName(t.role)},
                           {"prompt", t.prompt},
                           {"completion", t.completion},
                           {"decision", t.decision},
                           {"result", t.result},
                           {"wall_time", t.wall_time.count()}});
  }
  Json outcome = outcome_.success ? Json{{"status", "success"}}
                                  : Json{{"status", "failure"}, {"reason", outcome_.reason}};
  return Json{{"question", question_},
              {"entries", entries},
              {"final_answer", final_answer_ ? Json(*final_answer_) : Json(nullptr)},
              {"outcome", outcome},
              {"answer_mode", answer_mode_}};
}

Result<Transcript> Transcript::FromJson(const Json& j) {
  auto corrupt = [](std::string what) {
    return Error(ErrorCode::kCorruptTranscript, std::move(what));
  };
  if (!j.is_object()) return corrupt("transcript must be an object");
  for (const char* key : {"question", "entries", "final_answer", "outcome"}) {
    if (!j.contains(key)) return corrupt(std::string("missing field ") + key);
  }
  if (!j["question"].is_string() || !j["entries"].is_array()) {
    return corrupt("bad question/entries");
  }
  Transcript t(j["question"].get<std::string>());
  for (const Json& e : j["entries"]) {
    if (!e.is_object()) return corrupt("entry must be an object");
    for (const char* key : {"role", "prompt", "completion", "decision", "result", "wall_time"}) {
      if (!e.contains(key)) return corrupt(std::string("entry missing field ") + key);
    }
    if (!e["role"].is_string() || !e["prompt"].is_string() || !e["completion"].is_string() ||
        !e["wall_time"].is_number_integer()) {
      return corrupt("entry field has wrong type");
    }
    TurnRecord turn;
    const std::string role = e["role"].get<std::string>();
    if (role == "planner") {
      turn.role = TurnRole::kPlanner;
    } else if (role == "tool") {
      turn.role = TurnRole::kTool;
    } else if (role == "summarizer") {
      turn.role = TurnRole::kSummarizer;
    } else {
      return corrupt("unknown role " + role);
    }
    turn.prompt = e["prompt"].get<std::string>();
    turn.completion = e["completion"].get<std::string>();
    turn.decision = e["decision"];
    turn.result = e["result"];
    turn.wall_time = std::chrono::microseconds(e["wall_time"].get<int64_t>());
    t.entries_.push_back(std::move(turn));
  }
  const Json& fa = j["final_answer"];
  if (fa.is_string()) {
    t.final_answer_ = fa.get<std::string>();
  } else if (!fa.is_null()) {
    return corrupt("final_answer must be a string or null");
  }
  const Json& oc = j["outcome"];
  if (!oc.is_object() || !oc.contains("status") || !oc["status"].is_string()) {
    return corrupt("bad outcome");
  }
  const std::string status = oc["status"].get<std::string>();
  if (status == "success") {
    t.outcome_ = Outcome{true, ""};
  } else if (status == "failure") {
    t.outcome_ = Outcome{false, oc.value("reason", "")};
  } else {
    return corrupt("unknown outcome status " + status);
  }
  if (j.contains("answer_mode")) {
    if (!j["answer_mode"].is_string()) return corrupt("answer_mode must be a string");
    t.answer_mode_ = j["answer_mode"].get<std::string>();
  }
  return t;
}

Status AppendTranscripts(const std::filesystem::path& path,
                         const std::vector<Transcript>& transcripts) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) return Error(ErrorCode::kIoError, "cannot open for append", path.string());
  for (const Transcript& t : transcripts) out << t.ToJson().dump() << '\n';
  if (!out) return Error(ErrorCode::kIoError, "write failed", path.string());
  return Status::Ok();
}

Result<std::vector<Transcript>> ReadTranscripts(const std::filesystem::path& path) {
  TOOLPLAN_ASSIGN_OR_RETURN(std::string contents, ReadFile(path));
  std::vector<Transcript> out;
  size_t pos = 0;
  int64_t line_no = 0;
  while (pos < contents.size()) {
    ++line_no;
    const size_t nl = contents.find('\n', pos);
    if (nl == std::string::npos) {
      // A record is only complete once its newline has been written.
      return Error(ErrorCode::kCorruptTranscript, "truncated final record", path.string())
          .WithIndex(line_no);
    }
    std::string_view line(contents.data() + pos, nl - pos);
    pos = nl + 1;
    if (Trim(line).empty()) continue;
    Json j = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      return Error(ErrorCode::kCorruptTranscript, "invalid JSON", path.string())
          .WithIndex(line_no);
    }
    auto t = Transcript::FromJson(j);
    if (!t.ok()) {
      Error e = t.take_error();
      e.subject = path.string();
      e.index = line_no;
      return e;
    }
    out.push_back(std::move(t).value());
  }
  return out;
}

Result<std::string> ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return Error(ErrorCode::kIoError, "cannot open file", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Status WriteFile(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return Error(ErrorCode::kIoError, "cannot open for write", path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) return Error(ErrorCode::kIoError, "write failed", path.string());
  return Status::Ok();
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

std::filesystem::path DataDir() {
  if (const char* env = std::getenv("TOOLPLAN_DATA_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return TOOLPLAN_DEFAULT_DATA_DIR;
}

}  // namespace toolplan
