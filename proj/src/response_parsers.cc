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

#include "toolplan/response_parsers.h"

#include <cctype>
#include <initializer_list>
#include <utility>

namespace toolplan {
namespace {

bool IsBlank(char c) { return c == ' ' || c == '\t' || c == '\r'; }
bool IsSpace(char c) { return IsBlank(c) || c == '\n' || c == '\f' || c == '\v'; }

char Lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool StartsWithNoCase(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (size_t i = 0; i < prefix.size(); ++i) {
    if (Lower(s[i]) != Lower(prefix[i])) return false;
  }
  return true;
}

struct Line {
  size_t begin;  // offset of the first byte
  size_t end;    // offset one past the last byte, excluding '\n'
};

std::vector<Line> SplitLines(std::string_view text) {
  std::vector<Line> lines;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back({pos, text.size()});
      break;
    }
    lines.push_back({pos, nl});
    pos = nl + 1;
  }
  return lines;
}

// If `line` starts with `label` followed by optional blanks and a colon
// (ASCII or full-width), returns the offset just past the colon.
std::optional<size_t> MatchLabel(std::string_view text, Line line, std::string_view label) {
  size_t i = line.begin;
  while (i < line.end && IsBlank(text[i])) ++i;
  std::string_view rest = text.substr(i, line.end - i);
  if (!StartsWithNoCase(rest, label)) return std::nullopt;
  i += label.size();
  while (i < line.end && IsBlank(text[i])) ++i;
  if (i < line.end && text[i] == ':') return i + 1;
  constexpr std::string_view kFullWidthColon = "\xEF\xBC\x9A";
  if (text.substr(i, line.end - i).substr(0, 3) == kFullWidthColon) return i + 3;
  return std::nullopt;
}

std::optional<size_t> MatchAnyLabel(std::string_view text, Line line,
                                    std::initializer_list<std::string_view> labels) {
  for (std::string_view label : labels) {
    if (auto pos = MatchLabel(text, line, label)) return pos;
  }
  return std::nullopt;
}

struct LabelHit {
  size_t line_index;
  size_t content;  // offset just past the colon
};

std::optional<LabelHit> FindLastLabel(std::string_view text, const std::vector<Line>& lines,
                                      std::initializer_list<std::string_view> labels,
                                      size_t line_limit = static_cast<size_t>(-1)) {
  std::optional<LabelHit> hit;
  for (size_t i = 0; i < lines.size() && i < line_limit; ++i) {
    if (auto pos = MatchAnyLabel(text, lines[i], labels)) hit = LabelHit{i, *pos};
  }
  return hit;
}

size_t SkipSpace(std::string_view text, size_t pos) {
  while (pos < text.size() && IsSpace(text[pos])) ++pos;
  return pos;
}

// Skips whitespace and an opening code fence line ("```", "```json", ...).
size_t SkipSpaceAndFence(std::string_view text, size_t pos) {
  pos = SkipSpace(text, pos);
  if (text.substr(pos, 3) == "```") {
    const size_t nl = text.find('\n', pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    pos = SkipSpace(text, pos);
  }
  return pos;
}

// Minimal reader for the Python-literal subset models emit: lists of
// strings and dicts of string to string. Iterative, no recursion.
class LiteralReader {
 public:
  LiteralReader(std::string_view text, size_t pos) : text_(text), pos_(pos) {}

  size_t pos() const { return pos_; }

  Result<std::vector<std::string>> StringList() {
    if (!Consume('[')) return Malformed(ErrorCode::kMalformedList, "expected '['");
    std::vector<std::string> items;
    SkipWs();
    if (Consume(']')) return items;
    while (true) {
      SkipWs();
      auto item = Scalar(",]");
      if (!item.ok()) return Malformed(ErrorCode::kMalformedList, item.error().message);
      if (Trim(*item).empty() && !last_was_quoted_) {
        return Malformed(ErrorCode::kMalformedList, "empty list item");
      }
      items.push_back(std::move(item).value());
      SkipWs();
      if (Consume(']')) return items;
      if (!Consume(',')) return Malformed(ErrorCode::kMalformedList, "expected ',' or ']'");
      SkipWs();
      if (Consume(']')) return items;  // trailing comma
    }
  }

  using Entries = std::vector<std::pair<std::string, std::string>>;

  Result<Entries> Dict(ErrorCode code) {
    if (!Consume('{')) return Malformed(code, "expected '{'");
    const bool doubled = Consume('{');
    Entries entries;
    SkipWs();
    if (CloseDict(doubled)) return entries;
    while (true) {
      SkipWs();
      auto key = Scalar(":}");
      if (!key.ok()) return Malformed(code, key.error().message);
      SkipWs();
      if (!Consume(':')) return Malformed(code, "expected ':' after key");
      SkipWs();
      auto value = Scalar(",}");
      if (!value.ok()) return Malformed(code, value.error().message);
      entries.emplace_back(std::move(key).value(), std::move(value).value());
      SkipWs();
      if (CloseDict(doubled)) return entries;
      if (!Consume(',')) return Malformed(code, "expected ',' or '}'");
      SkipWs();
      if (CloseDict(doubled)) return entries;
    }
  }

  Result<std::vector<Entries>> DictList() {
    if (!Consume('[')) return Malformed(ErrorCode::kMalformedList, "expected '['");
    std::vector<Entries> dicts;
    SkipWs();
    if (Consume(']')) return dicts;
    while (true) {
      SkipWs();
      auto dict = Dict(ErrorCode::kMalformedList);
      if (!dict.ok()) return dict.take_error();
      dicts.push_back(std::move(dict).value());
      SkipWs();
      if (Consume(']')) return dicts;
      if (!Consume(',')) return Malformed(ErrorCode::kMalformedList, "expected ',' or ']'");
      SkipWs();
      if (Consume(']')) return dicts;
    }
  }

 private:
  void SkipWs() { pos_ = SkipSpace(text_, pos_); }

  bool Consume(char c) {
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool CloseDict(bool doubled) {
    if (pos_ >= text_.size() || text_[pos_] != '}') return false;
    if (doubled && pos_ + 1 < text_.size() && text_[pos_ + 1] == '}') {
      pos_ += 2;
    } else {
      ++pos_;
    }
    return true;
  }

  Error Malformed(ErrorCode code, std::string msg) const {
    return Error(code, std::move(msg)).WithIndex(static_cast<int64_t>(pos_));
  }

  // A quoted string, or a bare token running up to one of `stops`.
  Result<std::string> Scalar(std::string_view stops) {
    last_was_quoted_ = false;
    if (pos_ >= text_.size()) return Error(ErrorCode::kMalformedList, "unexpected end of text");
    const char q = text_[pos_];
    if (q == '"' || q == '\'') {
      last_was_quoted_ = true;
      ++pos_;
      std::string out;
      while (pos_ < text_.size()) {
        const char c = text_[pos_++];
        if (c == q) return out;
        if (c == '\\' && pos_ < text_.size()) {
          const char e = text_[pos_++];
          switch (e) {
            case 'n':
              out.push_back('\n');
              break;
            case 't':
              out.push_back('\t');
              break;
            case '\\':
            case '"':
            case '\'':
              out.push_back(e);
              break;
            default:
              out.push_back('\\');
              out.push_back(e);
          }
          continue;
        }
        out.push_back(c);
      }
      return Error(ErrorCode::kMalformedList, "unterminated string");
    }
    const size_t begin = pos_;
    while (pos_ < text_.size() && stops.find(text_[pos_]) == std::string_view::npos &&
           text_[pos_] != '\n') {
      ++pos_;
    }
    if (pos_ >= text_.size() || text_[pos_] == '\n') {
      return Error(ErrorCode::kMalformedList, "unterminated bare token");
    }
    return Trim(text_.substr(begin, pos_ - begin));
  }

  std::string_view text_;
  size_t pos_;
  bool last_was_quoted_ = false;
};

// Locates the value for `labels`: just past the last label, or at the
// start of the text when the label is absent and the text opens with
// `opener`.
std::optional<size_t> LocateValue(std::string_view text, const std::vector<Line>& lines,
                                  std::initializer_list<std::string_view> labels,
                                  char opener) {
  if (auto hit = FindLastLabel(text, lines, labels)) return SkipSpaceAndFence(text, hit->content);
  const size_t start = SkipSpaceAndFence(text, 0);
  if (start < text.size() && text[start] == opener) return start;
  return std::nullopt;
}

bool IsNoneToken(std::string_view raw) {
  std::string t = Trim(raw);
  if (t.size() >= 2 && (t.front() == '\'' || t.front() == '"') && t.back() == t.front()) {
    t = t.substr(1, t.size() - 2);
  }
  return t.empty() || ToLower(t) == "none";
}

std::string RestOfLine(std::string_view text, size_t from, Line line) {
  if (from > line.end) return "";
  return Trim(text.substr(from, line.end - from));
}

// Drops code fence lines and a single pair of surrounding backticks.
std::string StripFences(std::string_view raw) {
  std::string out;
  auto lines = SplitLines(raw);
  for (const Line& l : lines) {
    std::string_view line = raw.substr(l.begin, l.end - l.begin);
    if (Trim(line).rfind("```", 0) == 0) continue;
    if (!out.empty()) out.push_back('\n');
    out.append(line);
  }
  std::string t = Trim(out);
  if (t.size() >= 2 && t.front() == '`' && t.back() == '`') t = Trim(t.substr(1, t.size() - 2));
  return t;
}

}  // namespace

Result<ToolList> ParseToolList(std::string_view text) {
  const auto lines = SplitLines(text);
  auto start = LocateValue(text, lines, {"Tool", "Tools"}, '[');
  if (!start) return Error(ErrorCode::kMissingField, "no Tool line", "Tool");
  LiteralReader reader(text, *start);
  TOOLPLAN_ASSIGN_OR_RETURN(auto items, reader.StringList());
  ToolList out;
  for (const auto& item : items) out.tools.push_back(CanonicalizeToolName(item));
  return out;
}

Result<PairList> ParsePairList(std::string_view text) {
  const auto lines = SplitLines(text);
  auto start = LocateValue(text, lines, {"Tasks"}, '[');
  if (!start) return Error(ErrorCode::kMissingField, "no Tasks line", "Tasks");
  LiteralReader reader(text, *start);
  TOOLPLAN_ASSIGN_OR_RETURN(auto dicts, reader.DictList());
  PairList out;
  for (size_t i = 0; i < dicts.size(); ++i) {
    if (dicts[i].empty()) {
      return Error(ErrorCode::kMalformedList, "empty task entry").WithIndex(static_cast<int64_t>(i));
    }
    if (dicts[i].size() > 1) {
      return Error(ErrorCode::kMultiKeyEntry, "task entry has more than one key")
          .WithIndex(static_cast<int64_t>(i));
    }
    out.steps.push_back(PlanStep{CanonicalizeToolName(dicts[i][0].first), dicts[i][0].second});
  }
  return out;
}

Result<PlannerDecision> ParseStepwise(std::string_view text) {
  const auto lines = SplitLines(text);

  struct QueryHit {
    size_t content;
    bool none;
  };
  auto classify = [&](size_t content, size_t line_index) {
    const std::string rest = RestOfLine(text, content, lines[line_index]);
    if (!rest.empty()) return QueryHit{content, rest[0] != '{' && IsNoneToken(rest)};
    // Value may start on the next line.
    const size_t next = SkipSpace(text, content);
    return QueryHit{content, !(next < text.size() && text[next] == '{')};
  };

  std::optional<QueryHit> query;
  std::optional<std::string> final_answer;
  size_t first = 0;
  {
    // A completion primed by the prompt's trailing "Tool_Query:" label.
    const size_t start = SkipSpace(text, 0);
    if (!lines.empty() && !MatchLabel(text, lines[0], "Tool_Query")) {
      if (start < text.size() && text[start] == '{') {
        query = QueryHit{start, false};
      } else if (!lines.empty() && IsNoneToken(RestOfLine(text, 0, lines[0])) &&
                 !Trim(text).empty()) {
        query = QueryHit{0, true};
        first = 1;
      }
    }
  }
  for (size_t i = first; i < lines.size(); ++i) {
    if (auto pos = MatchLabel(text, lines[i], "Tool_Query")) {
      query = classify(*pos, i);
      continue;
    }
    if (MatchLabel(text, lines[i], "Result")) {
      if (query && !query->none) break;  // generation should have stopped here
      continue;
    }
    if (auto pos = MatchLabel(text, lines[i], "Final_Answer")) {
      final_answer = RestOfLine(text, *pos, lines[i]);
      break;
    }
  }
  if (!query) return Error(ErrorCode::kMissingField, "no Tool_Query line", "Tool_Query");
  if (query->none) {
    if (!final_answer) {
      return Error(ErrorCode::kFinalWithoutAnswer, "Tool_Query is None but no Final_Answer line");
    }
    return PlannerDecision(StepwiseFinal{*final_answer});
  }
  LiteralReader reader(text, SkipSpace(text, query->content));
  TOOLPLAN_ASSIGN_OR_RETURN(auto dict, reader.Dict(ErrorCode::kMalformedDict));
  if (dict.size() != 1) {
    return Error(ErrorCode::kMalformedDict, "Tool_Query must have exactly one key");
  }
  return PlannerDecision(
      StepwiseQuery{PlanStep{CanonicalizeToolName(dict[0].first), dict[0].second}});
}

Result<PlannerDecision> ParseReact(std::string_view text) {
  const auto lines = SplitLines(text);
  auto is_label_line = [&](Line l) {
    return MatchAnyLabel(text, l,
                         {"Observation", "Thought", "Action", "ActionInput", "Action Input",
                          "Final Answer", "Question"})
        .has_value();
  };
  // Text from `from` to the end of line `i`, plus continuation lines up to
  // the next label line.
  auto block = [&](size_t from, size_t i) {
    std::string out(text.substr(from, lines[i].end - from));
    for (size_t k = i + 1; k < lines.size() && !is_label_line(lines[k]); ++k) {
      out.push_back('\n');
      out.append(text.substr(lines[k].begin, lines[k].end - lines[k].begin));
    }
    return Trim(out);
  };

  std::optional<std::string> action;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (!action) {
      if (auto pos = MatchLabel(text, lines[i], "Final Answer")) {
        return PlannerDecision(ReactFinal{block(*pos, i)});
      }
      if (auto pos = MatchLabel(text, lines[i], "Action")) {
        action = RestOfLine(text, *pos, lines[i]);
      }
      continue;
    }
    if (auto pos = MatchAnyLabel(text, lines[i], {"ActionInput", "Action Input"})) {
      return PlannerDecision(ReactAct{CanonicalizeToolName(*action), StripFences(block(*pos, i))});
    }
  }
  if (action) return Error(ErrorCode::kMissingActionInput, "Action without ActionInput");
  return Error(ErrorCode::kMissingAction, "no Action or Final Answer line");
}

Result<SqlStatement> ParseSql(std::string_view text, SqlLabel label) {
  const auto lines = SplitLines(text);
  const std::string_view name = label == SqlLabel::kSqlQuery ? "SQLQuery" : "Answer";
  std::optional<size_t> start;
  size_t start_line = 0;
  if (auto hit = label == SqlLabel::kSqlQuery ? FindLastLabel(text, lines, {"SQLQuery", "SQL Query"})
                                              : FindLastLabel(text, lines, {"Answer"})) {
    start = hit->content;
    start_line = hit->line_index;
  } else {
    const size_t s = SkipSpaceAndFence(text, 0);
    std::string_view rest = text.substr(s);
    if (StartsWithNoCase(rest, "select") || StartsWithNoCase(rest, "with")) {
      start = s;
      for (size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].begin <= s && s <= lines[i].end) start_line = i;
      }
    }
  }
  if (!start) return Error(ErrorCode::kMissingField, "no " + std::string(name) + " line", std::string(name));

  // Collect until the next line that opens another section.
  size_t end = lines[start_line].end;
  for (size_t i = start_line + 1; i < lines.size(); ++i) {
    if (MatchAnyLabel(text, lines[i],
                      {"SQLResult", "SQL Result", "Answer", "Question", "Error", "SQLQuery",
                       "Final Answer", "Thought"})) {
      break;
    }
    end = lines[i].end;
  }
  const std::string sql = StripFences(text.substr(*start, end - *start));

  // Scan for a statement terminator outside quotes and comments.
  size_t terminator = std::string::npos;
  for (size_t i = 0; i < sql.size() && terminator == std::string::npos; ++i) {
    const char c = sql[i];
    if (c == '\'' || c == '"' || c == '`') {
      const size_t close = sql.find(c, i + 1);
      if (close == std::string::npos) break;
      i = close;
    } else if (c == '[') {
      const size_t close = sql.find(']', i + 1);
      if (close == std::string::npos) break;
      i = close;
    } else if (c == '-' && i + 1 < sql.size() && sql[i + 1] == '-') {
      const size_t nl = sql.find('\n', i);
      if (nl == std::string::npos) break;
      i = nl;
    } else if (c == '/' && i + 1 < sql.size() && sql[i + 1] == '*') {
      const size_t close = sql.find("*/", i + 2);
      if (close == std::string::npos) break;
      i = close + 1;
    } else if (c == ';') {
      terminator = i;
    }
  }
  std::string statement = sql;
  if (terminator != std::string::npos) {
    std::string_view tail = std::string_view(sql).substr(terminator);
    for (char c : tail) {
      if (c != ';' && !IsSpace(c)) {
        return Error(ErrorCode::kMultipleStatements, "more than one SQL statement");
      }
    }
    statement = Trim(sql.substr(0, terminator));
  }
  if (statement.empty()) return Error(ErrorCode::kEmptyStatement, "SQL statement is empty");
  return SqlStatement{statement};
}

Result<CodeSnippet> ParseSolutionCode(std::string_view text) {
  const auto lines = SplitLines(text);
  auto indent_of = [&](Line l) {
    size_t i = l.begin;
    while (i < l.end && IsBlank(text[i]) && text[i] != '\r') ++i;
    return i - l.begin;
  };
  auto is_blank_line = [&](Line l) {
    return Trim(text.substr(l.begin, l.end - l.begin)).empty();
  };
  auto is_def = [&](Line l) {
    std::string_view s = text.substr(l.begin, l.end - l.begin);
    size_t i = 0;
    while (i < s.size() && IsBlank(s[i])) ++i;
    s.remove_prefix(i);
    if (s.substr(0, 4) != "def ") return false;
    s.remove_prefix(4);
    while (!s.empty() && IsBlank(s.front())) s.remove_prefix(1);
    if (s.substr(0, 8) != "solution") return false;
    s.remove_prefix(8);
    while (!s.empty() && IsBlank(s.front())) s.remove_prefix(1);
    return !s.empty() && s.front() == '(';
  };

  std::optional<size_t> def_line;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (is_def(lines[i])) def_line = i;
  }
  if (!def_line) return Error(ErrorCode::kNoSolutionFunction, "no def solution() found");

  const size_t def_indent = indent_of(lines[*def_line]);
  size_t last_body = *def_line;
  size_t i = *def_line + 1;
  for (; i < lines.size(); ++i) {
    if (is_blank_line(lines[i])) continue;
    if (indent_of(lines[i]) <= def_indent) break;
    last_body = i;
  }
  if (last_body == *def_line) {
    return Error(ErrorCode::kNoSolutionFunction, "solution() has no body");
  }
  CodeSnippet snippet;
  for (size_t k = *def_line; k <= last_body; ++k) {
    if (k > *def_line) snippet.code.push_back('\n');
    std::string_view l = text.substr(lines[k].begin, lines[k].end - lines[k].begin);
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    snippet.code.append(l);
  }
  for (size_t k = last_body + 1; k < lines.size(); ++k) {
    if (auto pos = MatchLabel(text, lines[k], "Answer")) {
      snippet.claimed_answer = RestOfLine(text, *pos, lines[k]);
      break;
    }
  }
  return snippet;
}

Result<ToolAndSubtaskLists> ParseDualLists(std::string_view text) {
  const auto lines = SplitLines(text);
  auto tools_at = LocateValue(text, lines, {"Tool", "Tools"}, '[');
  auto sub_hit = FindLastLabel(text, lines, {"Subtasks", "Subtask"});
  if (!tools_at) return Error(ErrorCode::kMissingField, "no Tool line", "Tool");
  if (!sub_hit) return Error(ErrorCode::kMissingField, "no Subtasks line", "Subtasks");

  ToolAndSubtaskLists out;
  LiteralReader tools_reader(text, *tools_at);
  TOOLPLAN_ASSIGN_OR_RETURN(auto tools, tools_reader.StringList());
  for (const auto& t : tools) out.tools.push_back(CanonicalizeToolName(t));
  LiteralReader sub_reader(text, SkipSpaceAndFence(text, sub_hit->content));
  TOOLPLAN_ASSIGN_OR_RETURN(out.subtasks, sub_reader.StringList());
  return out;
}

std::string WrapAsSolution(std::string_view body) {
  for (const Line& l : SplitLines(body)) {
    std::string line = Trim(body.substr(l.begin, l.end - l.begin));
    if (line.rfind("def solution", 0) == 0) return std::string(body);
  }
  std::string out = "def solution():";
  size_t start = 0;
  while (start <= body.size()) {
    size_t end = body.find_first_of(";\n", start);
    if (end == std::string_view::npos) end = body.size();
    std::string stmt = Trim(body.substr(start, end - start));
    if (!stmt.empty()) out += "\n    " + stmt;
    start = end + 1;
  }
  return out;
}

Result<Json> ParseByGrammar(std::string_view grammar, std::string_view text) {
  auto decision = [](auto r) -> Result<Json> {
    if (!r.ok()) return r.take_error();
    return DecisionToJson(PlannerDecision(std::move(r).value()));
  };
  if (grammar == "tool_list") return decision(ParseToolList(text));
  if (grammar == "dual_lists") return decision(ParseDualLists(text));
  if (grammar == "pairs") return decision(ParsePairList(text));
  if (grammar == "stepwise") return decision(ParseStepwise(text));
  if (grammar == "react") return decision(ParseReact(text));
  if (grammar == "sql_query" || grammar == "sql_answer") {
    TOOLPLAN_ASSIGN_OR_RETURN(
        SqlStatement sql,
        ParseSql(text, grammar == "sql_query" ? SqlLabel::kSqlQuery : SqlLabel::kAnswer));
    return Json{{"sql", sql.text}};
  }
  if (grammar == "solution_code") {
    TOOLPLAN_ASSIGN_OR_RETURN(CodeSnippet code, ParseSolutionCode(text));
    Json j{{"code", code.code}};
    if (code.claimed_answer) j["claimed_answer"] = *code.claimed_answer;
    return j;
  }
  return Error(ErrorCode::kInvalidArgument, "unknown grammar", std::string(grammar));
}

Json DecisionToJson(const PlannerDecision& d) {
  struct Visitor {
    Json operator()(const ToolList& v) const { return {{"kind", "tool_list"}, {"tools", v.tools}}; }
    Json operator()(const ToolAndSubtaskLists& v) const {
      return {{"kind", "dual_lists"}, {"tools", v.tools}, {"subtasks", v.subtasks}};
    }
    Json operator()(const PairList& v) const {
      Json steps = Json::array();
      for (const auto& s : v.steps) steps.push_back({{"tool", s.tool}, {"subtask", s.subtask}});
      return {{"kind", "pairs"}, {"steps", steps}};
    }
    Json operator()(const StepwiseQuery& v) const {
      return {{"kind", "stepwise_query"}, {"tool", v.step.tool}, {"subtask", v.step.subtask}};
    }
    Json operator()(const StepwiseFinal& v) const {
      return {{"kind", "stepwise_final"}, {"answer", v.answer}};
    }
    Json operator()(const ReactAct& v) const {
      return {{"kind", "react_act"}, {"action", v.action}, {"action_input", v.action_input}};
    }
    Json operator()(const ReactFinal& v) const {
      return {{"kind", "react_final"}, {"answer", v.answer}};
    }
  };
  return std::visit(Visitor{}, d);
}

Result<PlannerDecision> DecisionFromJson(const Json& j) {
  auto bad = [] { return Error(ErrorCode::kCorruptTranscript, "malformed decision"); };
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) return bad();
  const std::string kind = j["kind"].get<std::string>();
  try {
    if (kind == "tool_list") return PlannerDecision(ToolList{j.at("tools").get<std::vector<std::string>>()});
    if (kind == "dual_lists") {
      return PlannerDecision(ToolAndSubtaskLists{j.at("tools").get<std::vector<std::string>>(),
                                                 j.at("subtasks").get<std::vector<std::string>>()});
    }
    if (kind == "pairs") {
      PairList p;
      for (const auto& s : j.at("steps")) {
        p.steps.push_back({s.at("tool").get<std::string>(), s.at("subtask").get<std::string>()});
      }
      return PlannerDecision(std::move(p));
    }
    if (kind == "stepwise_query") {
      return PlannerDecision(StepwiseQuery{
          PlanStep{j.at("tool").get<std::string>(), j.at("subtask").get<std::string>()}});
    }
    if (kind == "stepwise_final") return PlannerDecision(StepwiseFinal{j.at("answer").get<std::string>()});
    if (kind == "react_act") {
      return PlannerDecision(
          ReactAct{j.at("action").get<std::string>(), j.at("action_input").get<std::string>()});
    }
    if (kind == "react_final") return PlannerDecision(ReactFinal{j.at("answer").get<std::string>()});
  } catch (const Json::exception&) {
    return bad();
  }
  return bad();
}

}  // namespace toolplan
