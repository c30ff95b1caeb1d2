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

#include "toolplan/sql_workbench.h"

#include <sqlite3.h>

#include <algorithm>
#include <cctype>
#include <system_error>
#include <utility>

namespace toolplan {
namespace {

Cell I(int64_t v) { return Cell(v); }
Cell T(std::string v) { return Cell(std::move(v)); }

TableDef PersonTable() {
  TableDef t{"Person",
             {{"id", "TEXT", ""},
              {"name", "TEXT", ""},
              {"age", "INTEGER", ""},
              {"sex", "TEXT", "NOCASE"},
              {"school", "TEXT", ""},
              {"phone", "TEXT", ""},
              {"qualifications", "TEXT", ""},
              {"ability", "TEXT", ""}},
             {}};
  struct P {
    const char* id;
    const char* name;
    int age;
    const char* sex;
    const char* school;
    const char* phone;
    const char* qual;
    const char* ability;
  };
  const P people[] = {
      {"01", "Wang Min", 32, "Female", "Beijing University of Technology", "13938493271",
       "Undergraduate", "Tourism Industry-related Work"},
      {"02", "Li Liang", 27, "Male", "Beijing University of Technology", "13812764851", "Master",
       "Internet Company Operations"},
      {"03", "Zhang Jing", 50, "Female", "Wuhan University of Technology", "13764592384",
       "Master", "Editor of Publishing House"},
      {"04", "Chen Hao", 29, "Male", "Tsinghua University", "13611027745", "Doctor",
       "Machine Learning Research"},
      {"05", "Liu Yang", 41, "Male", "Shandong University", "13905318862", "Undergraduate",
       "Civil Engineering"},
      {"06", "Zhao Lei", 35, "Male", "Zhejiang University", "13757120934", "Master",
       "Software Development"},
      {"07", "Sun Li", 26, "Female", "Fudan University", "13621876603", "Undergraduate",
       "Marketing"},
      {"08", "Zhou Jie", 38, "Male", "Wuhan University", "13871249950", "Master",
       "Financial Analysis"},
      {"09", "Wu Fang", 44, "Female", "Central South University", "13907318815", "Doctor",
       "Clinical Medicine"},
      {"10", "Zheng Qiang", 31, "Male", "Nanjing University", "13913864027", "Undergraduate",
       "Logistics Management"},
      {"11", "Huang Min", 23, "Female", "Soochow University", "13862109476", "Undergraduate",
       "Graphic Design"},
      {"12", "Xu Tao", 47, "Male", "Sichuan University", "13808017730", "Master",
       "Hospital Administration"},
      {"13", "Ma Lin", 36, "Female", "Xiamen University", "13959208841", "Master",
       "Accounting"},
      {"14", "Hu Jun", 33, "Male", "Jilin University", "13943102256", "Undergraduate",
       "Automotive Engineering"},
      {"15", "Guo Ying", 28, "Female", "Shenzhen University", "13714863390", "Undergraduate",
       "Journalism"},
      {"16", "He Ping", 52, "Male", "Peking University", "13601104418", "Doctor",
       "University Teaching"},
      {"17", "Gao Xue", 25, "Female", "Capital Normal University", "13520986614",
       "Undergraduate", "Primary School Teaching"},
      {"18", "Lin Feng", 39, "Male", "Tsinghua University", "13810457729", "Master",
       "Architecture Design"},
      {"19", "Luo Na", 30, "Female", "Wuhan University of Technology", "13986213307",
       "Undergraduate", "Human Resources"},
      {"20", "Liang Bo", 45, "Male", "Zhejiang University", "13958016652", "Doctor",
       "Pharmaceutical Research"},
      {"21", "Song Qian", 24, "Female", "Shandong University", "13573128894", "Undergraduate",
       "Translation"},
      {"22", "Xie Yu", 34, "Female", "Fudan University", "13917724405", "Master",
       "Investment Banking"},
      {"23", "Tang Kai", 40, "Male", "Central South University", "13874839926",
       "Undergraduate", "Mining Engineering"},
      {"24", "Han Mei", 29, "Female", "Nanjing University", "13770612283", "Master",
       "Museum Curation"},
      {"25", "Feng Yan", 41, "Female", "Beijing University of Technology", "13501237768",
       "Undergraduate", "Tourism Industry-related Work"},
  };
  for (const P& p : people) {
    t.rows.push_back({T(p.id), T(p.name), I(p.age), T(p.sex), T(p.school), T(p.phone),
                      T(p.qual), T(p.ability)});
  }
  return t;
}

TableDef SchoolTable() {
  TableDef t{"School",
             {{"id", "TEXT", ""},
              {"name", "TEXT", ""},
              {"info_985", "TEXT", ""},
              {"info_211", "TEXT", ""}},
             {}};
  struct S {
    const char* id;
    const char* name;
    const char* is_985;
    const char* is_211;
  };
  const S schools[] = {
      {"01", "Central South University", "yes", "yes"},
      {"02", "Shandong University", "yes", "yes"},
      {"03", "Tsinghua University", "yes", "yes"},
      {"04", "Peking University", "yes", "yes"},
      {"05", "Fudan University", "yes", "yes"},
      {"06", "Zhejiang University", "yes", "yes"},
      {"07", "Wuhan University", "yes", "yes"},
      {"08", "Nanjing University", "yes", "yes"},
      {"09", "Sichuan University", "yes", "yes"},
      {"10", "Xiamen University", "yes", "yes"},
      {"11", "Jilin University", "yes", "yes"},
      {"12", "Beijing University of Technology", "no", "yes"},
      {"13", "Wuhan University of Technology", "no", "yes"},
      {"14", "Soochow University", "no", "yes"},
      {"15", "Shenzhen University", "no", "no"},
      {"16", "Capital Normal University", "no", "no"},
  };
  for (const S& s : schools) t.rows.push_back({T(s.id), T(s.name), T(s.is_985), T(s.is_211)});
  return t;
}

FixtureSet PersonSchool() { return {std::string(kPersonSchool), {PersonTable(), SchoolTable()}, {}}; }

FixtureSet GoldenMelody() {
  TableDef awards{"GoldenMelodyAward",
                  {{"Nominated_Count", "INTEGER", ""},
                   {"Competing_Count", "INTEGER", ""},
                   {"Awards_Count", "INTEGER", ""},
                   {"Award_Name", "TEXT", ""},
                   {"Host", "TEXT", ""},
                   {"Year", "TIME", ""}},
                  {}};
  // Host averages: Lan Xin 8, Zhou Ming (9 + 22) / 2, Chen Rui 20, Wu Tong 22.
  awards.rows = {
      {I(112), I(560), I(8), T("24th Golden Melody"), T("Lan Xin"), T("2013")},
      {I(118), I(575), I(9), T("25th Golden Melody"), T("Zhou Ming"), T("2014")},
      {I(121), I(590), I(20), T("26th Golden Melody"), T("Chen Rui"), T("2015")},
      {I(124), I(602), I(22), T("27th Golden Melody"), T("Wu Tong"), T("2016")},
      {I(127), I(611), I(22), T("28th Golden Melody"), T("Zhou Ming"), T("2017")},
  };
  TableDef nominees{"AwardNominees",
                    {{"Singer_ID", "INTEGER", ""},
                     {"Nominated_Work", "TEXT", ""},
                     {"Award_Name", "TEXT", ""},
                     {"Award_Edition_ID", "INTEGER", ""}},
                    {}};
  nominees.rows = {
      {I(1), T("Play"), T("Best Mandarin Album"), I(26)},
      {I(4), T("Unlock"), T("Best Female Vocalist"), I(24)},
      {I(5), T("Amit 2"), T("Best Mandarin Album"), I(27)},
      {I(6), T("Rice and Shine"), T("Best Male Vocalist"), I(25)},
      {I(7), T("Kepler"), T("Best Female Vocalist"), I(26)},
      {I(1), T("Ugly Beauty"), T("Best Mandarin Album"), I(28)},
  };
  TableDef singers{"Singers",
                   {{"Name", "TEXT", ""},
                    {"Song_Count", "INTEGER", ""},
                    {"Album_Count", "INTEGER", ""},
                    {"Fan_Count", "INTEGER", ""},
                    {"Gender", "TEXT", ""},
                    {"Singer_ID", "INTEGER", ""}},
                   {}};
  singers.rows = {
      {T("Jolin Tsai"), I(180), I(10), I(1200), T("Female"), I(1)},
      {T("Jay Chou"), I(220), I(15), I(9800), T("Male"), I(2)},
      {T("Jian Cui"), I(120), I(8), I(4500), T("Male"), I(3)},
      {T("Penny Tai"), I(150), I(12), I(3000), T("Female"), I(4)},
      {T("A-Mei"), I(260), I(18), I(5200), T("Female"), I(5)},
      {T("Eason Chan"), I(300), I(20), I(6100), T("Male"), I(6)},
      {T("Stefanie Sun"), I(170), I(13), I(3900), T("Female"), I(7)},
  };
  TableDef companies{"RecordCompanies",
                     {{"Record_Company", "TEXT", ""},
                      {"Signing_Date", "TIME", ""},
                      {"Singer_ID", "INTEGER", ""}},
                     {}};
  companies.rows = {
      {T("Sony Music"), T("2014-03-01"), I(1)},
      {T("JVR Music"), T("2007-06-15"), I(2)},
      {T("Modern Sky"), T("2010-09-20"), I(3)},
      {T("Universal Music"), T("2012-01-10"), I(5)},
      {T("Universal Music"), T("2009-11-05"), I(6)},
      {T("Warner Music"), T("2011-04-18"), I(7)},
  };
  return {std::string(kGoldenMelody),
          {std::move(awards), std::move(nominees), std::move(singers), std::move(companies)},
          {"CREATE VIEW GoldenMelodyAwards AS SELECT * FROM GoldenMelodyAward"}};
}

FixtureSet JournalCover() {
  TableDef journal{"Journal",
                   {{"Name", "TEXT", ""},
                    {"First_Issue_Date", "TIME", ""},
                    {"Journal_ID", "INTEGER", ""},
                    {"Category", "TEXT", ""},
                    {"Sponsor_Organization", "TEXT", ""},
                    {"Country", "TEXT", ""},
                    {"Language", "TEXT", ""},
                    {"Publication_Count", "INTEGER", ""}},
                   {}};
  // Overall average 330; only English (about 466.7) lies above it.
  journal.rows = {
      {T("Time"), T("1923-03-03"), I(1), T("News"), T("Time USA"), T("USA"), T("English"),
       I(520)},
      {T("Paris Match"), T("1949-03-25"), I(2), T("News"), T("Lagardere"), T("France"),
       T("French"), I(200)},
      {T("Sports Illustrated"), T("1954-08-16"), I(3), T("Sports"), T("Arena Group"), T("USA"),
       T("English"), I(480)},
      {T("Nikkei Business"), T("1969-09-01"), I(4), T("Business"), T("Nikkei BP"), T("Japan"),
       T("Japanese"), I(150)},
      {T("The Economist"), T("1843-09-02"), I(5), T("Economics"), T("The Economist Group"),
       T("China"), T("Chinese"), I(300)},
      {T("Reader's Digest"), T("1922-02-05"), I(6), T("General"), T("Trusted Media Brands"),
       T("USA"), T("English"), I(400)},
      {T("Caixin Weekly"), T("1998-04-01"), I(7), T("Finance"), T("Caixin Media"),
       T("China"), T("Chinese"), I(260)},
  };
  // Person_ID holds the cover figure's name; the column's INTEGER affinity
  // leaves non-numeric text as text.
  TableDef cover{"CoverPersonality",
                 {{"Person_ID", "INTEGER", ""},
                  {"Journal_ID", "INTEGER", ""},
                  {"Count", "INTEGER", ""}},
                 {}};
  cover.rows = {
      {T("Qing Hai"), I(1), I(3)},
      {T("Xiaoming Huang"), I(2), I(5)},
      {T("Cristiano Ronaldo"), I(3), I(7)},
      {T("Kobe Bryant"), I(4), I(2)},
      {T("Yao Ming"), I(7), I(9)},
  };
  return {std::string(kJournalCover), {std::move(journal), std::move(cover)}, {}};
}

struct Constraint {
  const char* sql;
  std::vector<std::string> rows;  // compared as a multiset
};

std::vector<Constraint> ConstraintsFor(std::string_view id) {
  if (id == kPersonSchool) {
    return {
        {"select avg(age) from Person", {"35.16"}},
        {"select count(*) from Person where sex = 'male'", {"12"}},
        {"select count(*) from School where info_985 = 'yes' and info_211 = 'yes'", {"11"}},
        {"select name from Person where id = '01'", {"Wang Min"}},
    };
  }
  if (id == kGoldenMelody) {
    return {
        {"select Award_Name from GoldenMelodyAwards where Host not in ( select Host from "
         "GoldenMelodyAwards group by Host order by avg ( Awards_Count ) asc limit 2 )",
         {"26th Golden Melody", "27th Golden Melody"}},
        {"select Name from Singers where Singer_ID not in ( select Singer_ID from "
         "AwardNominees )",
         {"Jay Chou", "Jian Cui"}},
        {"select Name, Gender from Singers where Singer_ID not in ( select Singer_ID from "
         "RecordCompanies )",
         {"Penny Tai: Female"}},
        {"select a.Awards_Count / b.Awards_Count from ( select Awards_Count from "
         "GoldenMelodyAwards where Award_Name == '27th Golden Melody' ) a , ( select "
         "Awards_Count from GoldenMelodyAwards where Award_Name == '28th Golden Melody' ) b",
         {"1"}},
        {"select Name from Singers where Fan_Count < 1600", {"Jolin Tsai"}},
        {"select Album_Count from Singers where Name = 'Jolin Tsai'", {"10"}},
    };
  }
  if (id == kJournalCover) {
    return {
        {"select Name, Language from Journal where Journal_ID not in ( select Journal_ID from "
         "CoverPersonality )",
         {"The Economist: Chinese", "Reader's Digest: English"}},
        {"select Language from Journal group by Language having avg ( Publication_Count ) > ( "
         "select avg ( Publication_Count ) from Journal )",
         {"English"}},
        {"select Person_ID from CoverPersonality where Count < ( select max ( Count ) from "
         "CoverPersonality )",
         {"Qing Hai", "Xiaoming Huang", "Cristiano Ronaldo", "Kobe Bryant"}},
    };
  }
  return {};
}

Result<FixtureSet> RawFixture(std::string_view id) {
  if (id == kPersonSchool) return PersonSchool();
  if (id == kGoldenMelody) return GoldenMelody();
  if (id == kJournalCover) return JournalCover();
  return Error(ErrorCode::kUnknownFixture, "unknown fixture", std::string(id));
}

std::string QuoteIdent(std::string_view name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

Error SqliteError(sqlite3* db, std::string_view what) {
  return Error(ErrorCode::kSqlError, std::string(what) + ": " + sqlite3_errmsg(db));
}

Status ExecScript(sqlite3* db, const std::string& sql) {
  char* msg = nullptr;
  if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &msg) != SQLITE_OK) {
    Error e(ErrorCode::kSqlError, msg != nullptr ? msg : "exec failed");
    sqlite3_free(msg);
    return e;
  }
  return Status::Ok();
}

Status BindCell(sqlite3_stmt* stmt, int index, const Cell& cell) {
  int rc = SQLITE_OK;
  if (std::holds_alternative<std::monostate>(cell)) {
    rc = sqlite3_bind_null(stmt, index);
  } else if (const auto* i = std::get_if<int64_t>(&cell)) {
    rc = sqlite3_bind_int64(stmt, index, *i);
  } else if (const auto* d = std::get_if<double>(&cell)) {
    rc = sqlite3_bind_double(stmt, index, *d);
  } else {
    const std::string& s = std::get<std::string>(cell);
    rc = sqlite3_bind_text(stmt, index, s.data(), static_cast<int>(s.size()), SQLITE_TRANSIENT);
  }
  if (rc != SQLITE_OK) return Error(ErrorCode::kSqlError, "bind failed");
  return Status::Ok();
}

Status InsertRows(sqlite3* db, const std::string& table, size_t width,
                  const std::vector<std::vector<Cell>>& rows) {
  std::string sql = "INSERT INTO " + QuoteIdent(table) + " VALUES (";
  for (size_t i = 0; i < width; ++i) sql += i == 0 ? "?" : ", ?";
  sql += ")";
  sqlite3_stmt* stmt = nullptr;
  if (sqlite3_prepare_v2(db, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
    return SqliteError(db, "prepare insert into " + table);
  }
  Status status;
  for (size_t r = 0; r < rows.size() && status.ok(); ++r) {
    if (rows[r].size() != width) {
      status = Error(ErrorCode::kSqlError, "row width does not match table", table)
                   .WithIndex(static_cast<int64_t>(r));
      break;
    }
    sqlite3_reset(stmt);
    for (size_t c = 0; c < width && status.ok(); ++c) {
      status = BindCell(stmt, static_cast<int>(c + 1), rows[r][c]);
    }
    if (status.ok() && sqlite3_step(stmt) != SQLITE_DONE) {
      status = SqliteError(db, "insert into " + table);
    }
  }
  sqlite3_finalize(stmt);
  return status;
}

Cell ReadCell(sqlite3_stmt* stmt, int col) {
  switch (sqlite3_column_type(stmt, col)) {
    case SQLITE_INTEGER:
      return Cell(static_cast<int64_t>(sqlite3_column_int64(stmt, col)));
    case SQLITE_FLOAT:
      return Cell(sqlite3_column_double(stmt, col));
    case SQLITE_NULL:
      return Cell();
    default: {
      const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt, col));
      const int n = sqlite3_column_bytes(stmt, col);
      return Cell(std::string(text != nullptr ? text : "", static_cast<size_t>(n)));
    }
  }
}

// Skips whitespace, `--` comments and `/* */` comments.
size_t SkipSqlTrivia(std::string_view s, size_t i) {
  while (i < s.size()) {
    if (std::isspace(static_cast<unsigned char>(s[i]))) {
      ++i;
    } else if (s.substr(i, 2) == "--") {
      const size_t nl = s.find('\n', i);
      i = nl == std::string_view::npos ? s.size() : nl + 1;
    } else if (s.substr(i, 2) == "/*") {
      const size_t end = s.find("*/", i + 2);
      i = end == std::string_view::npos ? s.size() : end + 2;
    } else {
      break;
    }
  }
  return i;
}

bool StartsWithKeyword(std::string_view s, std::string_view kw) {
  if (s.size() < kw.size()) return false;
  for (size_t i = 0; i < kw.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != kw[i]) return false;
  }
  return s.size() == kw.size() || !(std::isalnum(static_cast<unsigned char>(s[kw.size()])) ||
                                    s[kw.size()] == '_');
}

// True when the statement text contains ORDER BY outside string literals.
bool HasOrderBy(std::string_view sql) {
  std::string flat;
  char quote = 0;
  for (char c : sql) {
    if (quote != 0) {
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      continue;
    }
    flat.push_back(std::isspace(static_cast<unsigned char>(c))
                       ? ' '
                       : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  for (size_t pos = flat.find("order"); pos != std::string::npos;
       pos = flat.find("order", pos + 1)) {
    size_t j = pos + 5;
    while (j < flat.size() && flat[j] == ' ') ++j;
    if (j > pos + 5 && flat.compare(j, 2, "by") == 0) return true;
  }
  return false;
}

Result<Cell> CellFromJson(const Json& j) {
  if (j.is_null()) return Cell();
  if (j.is_number_integer()) return Cell(j.get<int64_t>());
  if (j.is_number()) return Cell(j.get<double>());
  if (j.is_string()) return Cell(j.get<std::string>());
  return Error(ErrorCode::kSqlError, "unsupported cell value in rows file");
}

}  // namespace

std::string CellToText(const Cell& cell) {
  if (std::holds_alternative<std::monostate>(cell)) return "None";
  if (const auto* i = std::get_if<int64_t>(&cell)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&cell)) return FormatDouble(*d);
  return std::get<std::string>(cell);
}

Json CellToJson(const Cell& cell) {
  if (std::holds_alternative<std::monostate>(cell)) return nullptr;
  if (const auto* i = std::get_if<int64_t>(&cell)) return *i;
  if (const auto* d = std::get_if<double>(&cell)) return *d;
  return std::get<std::string>(cell);
}

std::string ResultTable::ToText() const {
  std::string out;
  for (size_t r = 0; r < rows.size(); ++r) {
    if (r > 0) out += ", ";
    for (size_t c = 0; c < rows[r].size(); ++c) {
      if (c > 0) out += ": ";
      out += CellToText(rows[r][c]);
    }
  }
  return out;
}

std::vector<std::string> KnownFixtureIds() {
  return {std::string(kPersonSchool), std::string(kGoldenMelody), std::string(kJournalCover)};
}

std::string TableDdl(const TableDef& table) {
  std::string out = "CREATE TABLE " + table.name + " (";
  for (size_t i = 0; i < table.columns.size(); ++i) {
    const Column& c = table.columns[i];
    out += (i == 0 ? "\n\t" : ",\n\t") + c.name + " " + c.type;
    if (!c.collation.empty()) out += " COLLATE " + c.collation;
  }
  return out + "\n)";
}

Result<FixtureSet> BuildFixtureData(std::string_view id) {
  TOOLPLAN_ASSIGN_OR_RETURN(FixtureSet fixture, RawFixture(id));
  TOOLPLAN_ASSIGN_OR_RETURN(auto db, Database::Open(fixture));
  for (const Constraint& c : ConstraintsFor(id)) {
    auto result = db->Execute(c.sql);
    if (!result.ok()) {
      return Error(ErrorCode::kConstraintUnsatisfiable, "constraint query failed", c.sql)
          .WithCause(result.take_error());
    }
    std::vector<std::string> got;
    for (const auto& row : result->rows) {
      ResultTable single{result->columns, {row}, false};
      got.push_back(single.ToText());
    }
    std::vector<std::string> want = c.rows;
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    if (got != want) {
      return Error(ErrorCode::kConstraintUnsatisfiable,
                   "rows do not reproduce gold answer; got " + result->ToText(), c.sql);
    }
  }
  return fixture;
}

Status WriteFixtureFiles(const FixtureSet& fixture, const std::filesystem::path& dir) {
  const std::filesystem::path out = dir / fixture.id;
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) return Error(ErrorCode::kIoError, ec.message(), out.string());
  std::string schema;
  for (const TableDef& t : fixture.tables) schema += TableDdl(t) + ";\n\n";
  for (const std::string& v : fixture.views) schema += v + ";\n\n";
  TOOLPLAN_RETURN_IF_ERROR(WriteFile(out / "schema.sql", schema));
  Json rows = Json::object();
  for (const TableDef& t : fixture.tables) {
    Json table = Json::array();
    for (const auto& row : t.rows) {
      Json r = Json::array();
      for (const Cell& c : row) r.push_back(CellToJson(c));
      table.push_back(std::move(r));
    }
    rows[t.name] = std::move(table);
  }
  // One row per line keeps diffs readable.
  std::string text = "{\n";
  bool first_table = true;
  for (const TableDef& t : fixture.tables) {
    text += std::string(first_table ? "" : ",\n") + "  " + Json(t.name).dump() + ": [\n";
    first_table = false;
    const Json& table = rows[t.name];
    for (size_t i = 0; i < table.size(); ++i) {
      text += "    " + table[i].dump() + (i + 1 < table.size() ? ",\n" : "\n");
    }
    text += "  ]";
  }
  text += "\n}\n";
  return WriteFile(out / "rows.json", text);
}

// ---------------------------------------------------------------------------
// Database

Database::~Database() {
  if (db_ != nullptr) sqlite3_close(db_);
}

Result<std::shared_ptr<Database>> Database::Open(const FixtureSet& fixture) {
  std::shared_ptr<Database> d(new Database());
  d->id_ = fixture.id;
  if (sqlite3_open_v2(":memory:", &d->db_,
                      SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    return Error(ErrorCode::kSqlError, "cannot open in-memory database");
  }
  for (const TableDef& t : fixture.tables) {
    TOOLPLAN_RETURN_IF_ERROR(ExecScript(d->db_, TableDdl(t)));
    TOOLPLAN_RETURN_IF_ERROR(InsertRows(d->db_, t.name, t.columns.size(), t.rows));
  }
  for (const std::string& v : fixture.views) TOOLPLAN_RETURN_IF_ERROR(ExecScript(d->db_, v));
  TOOLPLAN_RETURN_IF_ERROR(d->Seal());
  return d;
}

Result<std::shared_ptr<Database>> Database::OpenFromFiles(const std::filesystem::path& dir) {
  TOOLPLAN_ASSIGN_OR_RETURN(std::string schema, ReadFile(dir / "schema.sql"));
  TOOLPLAN_ASSIGN_OR_RETURN(std::string rows_text, ReadFile(dir / "rows.json"));
  Json rows = Json::parse(rows_text, nullptr, false);
  if (rows.is_discarded() || !rows.is_object()) {
    return Error(ErrorCode::kSqlError, "rows.json is not a JSON object", (dir / "rows.json").string());
  }
  std::shared_ptr<Database> d(new Database());
  d->id_ = dir.filename().string();
  if (sqlite3_open_v2(":memory:", &d->db_,
                      SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    return Error(ErrorCode::kSqlError, "cannot open in-memory database");
  }
  TOOLPLAN_RETURN_IF_ERROR(ExecScript(d->db_, schema));
  for (const auto& [table, table_rows] : rows.items()) {
    if (!table_rows.is_array()) return Error(ErrorCode::kSqlError, "rows must be an array", table);
    std::vector<std::vector<Cell>> cells;
    size_t width = 0;
    for (const Json& row : table_rows) {
      if (!row.is_array()) return Error(ErrorCode::kSqlError, "row must be an array", table);
      std::vector<Cell> r;
      for (const Json& v : row) {
        TOOLPLAN_ASSIGN_OR_RETURN(Cell c, CellFromJson(v));
        r.push_back(std::move(c));
      }
      width = r.size();
      cells.push_back(std::move(r));
    }
    if (!cells.empty()) TOOLPLAN_RETURN_IF_ERROR(InsertRows(d->db_, table, width, cells));
  }
  TOOLPLAN_RETURN_IF_ERROR(d->Seal());
  return d;
}

Status Database::Seal() {
  // Capture table summaries while PRAGMA is still allowed.
  sqlite3_stmt* stmt = nullptr;
  if (sqlite3_prepare_v2(db_, "SELECT name FROM sqlite_master WHERE type = 'table' ORDER BY rowid",
                         -1, &stmt, nullptr) != SQLITE_OK) {
    return SqliteError(db_, "list tables");
  }
  std::vector<std::string> names;
  while (sqlite3_step(stmt) == SQLITE_ROW) {
    names.emplace_back(reinterpret_cast<const char*>(sqlite3_column_text(stmt, 0)));
  }
  sqlite3_finalize(stmt);
  for (const std::string& name : names) {
    TableSummary summary{name, {}, {}};
    std::string sql = "PRAGMA table_info(" + QuoteIdent(name) + ")";
    if (sqlite3_prepare_v2(db_, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
      return SqliteError(db_, "table_info");
    }
    while (sqlite3_step(stmt) == SQLITE_ROW) {
      summary.columns.push_back({reinterpret_cast<const char*>(sqlite3_column_text(stmt, 1)),
                                 reinterpret_cast<const char*>(sqlite3_column_text(stmt, 2)),
                                 ""});
    }
    sqlite3_finalize(stmt);
    sql = "SELECT * FROM " + QuoteIdent(name) + " LIMIT " + std::to_string(kMaxSampleRows);
    if (sqlite3_prepare_v2(db_, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
      return SqliteError(db_, "sample rows");
    }
    while (sqlite3_step(stmt) == SQLITE_ROW) {
      std::vector<Cell> row;
      for (int c = 0; c < sqlite3_column_count(stmt); ++c) row.push_back(ReadCell(stmt, c));
      summary.sample_rows.push_back(std::move(row));
    }
    sqlite3_finalize(stmt);
    tables_.push_back(std::move(summary));
  }
  TOOLPLAN_RETURN_IF_ERROR(ExecScript(db_, "PRAGMA query_only = ON"));
  sqlite3_set_authorizer(db_, &Database::Authorize, this);
  sqlite3_progress_handler(db_, 1000, &Database::Progress, this);
  return Status::Ok();
}

int Database::Authorize(void*, int action, const char*, const char*, const char*, const char*) {
  switch (action) {
    case SQLITE_SELECT:
    case SQLITE_READ:
    case SQLITE_FUNCTION:
    case SQLITE_RECURSIVE:
      return SQLITE_OK;
    default:
      return SQLITE_DENY;
  }
}

int Database::Progress(void* self) {
  auto* d = static_cast<Database*>(self);
  return std::chrono::steady_clock::now() > d->deadline_ ? 1 : 0;
}

Result<ResultTable> Database::Execute(std::string_view sql) const {
  const size_t start = SkipSqlTrivia(sql, 0);
  std::string_view body = sql.substr(start);
  if (!StartsWithKeyword(body, "select") && !StartsWithKeyword(body, "with")) {
    return Error(ErrorCode::kNotASelect, "only SELECT statements are allowed");
  }
  std::lock_guard<std::mutex> lock(mu_);
  deadline_ = std::chrono::steady_clock::now() + timeout_;
  sqlite3_stmt* stmt = nullptr;
  const char* tail = nullptr;
  const std::string text(body);
  const int rc = sqlite3_prepare_v2(db_, text.c_str(), static_cast<int>(text.size()), &stmt, &tail);
  if (rc != SQLITE_OK) {
    const int ext = sqlite3_extended_errcode(db_);
    if (ext == SQLITE_AUTH) {
      return Error(ErrorCode::kNotASelect, sqlite3_errmsg(db_));
    }
    if (rc == SQLITE_INTERRUPT) return Error(ErrorCode::kTimeout, "statement exceeded time limit");
    return Error(ErrorCode::kSqlError, sqlite3_errmsg(db_));
  }
  if (stmt == nullptr) return Error(ErrorCode::kNotASelect, "empty statement");
  auto finalize = [&stmt] { sqlite3_finalize(stmt); };
  std::string_view rest(tail);
  size_t k = 0;
  while (true) {
    k = SkipSqlTrivia(rest, k);
    if (k < rest.size() && rest[k] == ';') {
      ++k;
      continue;
    }
    break;
  }
  if (k < rest.size()) {
    finalize();
    return Error(ErrorCode::kNotASelect, "more than one statement");
  }
  if (!sqlite3_stmt_readonly(stmt)) {
    finalize();
    return Error(ErrorCode::kNotASelect, "statement is not read-only");
  }
  ResultTable table;
  table.ordered = HasOrderBy(text);
  const int ncol = sqlite3_column_count(stmt);
  for (int c = 0; c < ncol; ++c) table.columns.emplace_back(sqlite3_column_name(stmt, c));
  while (true) {
    const int step = sqlite3_step(stmt);
    if (step == SQLITE_ROW) {
      std::vector<Cell> row;
      row.reserve(static_cast<size_t>(ncol));
      for (int c = 0; c < ncol; ++c) row.push_back(ReadCell(stmt, c));
      table.rows.push_back(std::move(row));
      continue;
    }
    if (step == SQLITE_DONE) break;
    Error e = step == SQLITE_INTERRUPT
                  ? Error(ErrorCode::kTimeout, "statement exceeded time limit")
                  : Error(ErrorCode::kSqlError, sqlite3_errmsg(db_));
    finalize();
    return e;
  }
  finalize();
  return table;
}

Result<std::shared_ptr<Database>> LoadFixture(std::string_view id) {
  TOOLPLAN_ASSIGN_OR_RETURN(FixtureSet fixture, RawFixture(id));
  return Database::Open(fixture);
}

}  // namespace toolplan
