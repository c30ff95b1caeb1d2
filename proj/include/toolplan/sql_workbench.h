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

// Fixture databases and read-only query execution over SQLite.

#ifndef TOOLPLAN_SQL_WORKBENCH_H_
#define TOOLPLAN_SQL_WORKBENCH_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "toolplan/core_model.h"
#include "toolplan/result.h"

struct sqlite3;

namespace toolplan {

inline constexpr std::string_view kPersonSchool = "person-school";
inline constexpr std::string_view kGoldenMelody = "golden-melody";
inline constexpr std::string_view kJournalCover = "journal-cover";

// NULL, INTEGER, REAL or TEXT.
using Cell = std::variant<std::monostate, int64_t, double, std::string>;

// Integers in decimal, reals in shortest round-trip form, NULL as "None".
std::string CellToText(const Cell& cell);
Json CellToJson(const Cell& cell);

struct Column {
  std::string name;
  std::string type;
  std::string collation;  // empty for the default
};

struct TableDef {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> rows;
};

struct FixtureSet {
  std::string id;
  std::vector<TableDef> tables;
  std::vector<std::string> views;  // CREATE VIEW statements
};

std::vector<std::string> KnownFixtureIds();

// The synthesized rows for `id`. Every gold answer the fixture must support
// is checked by executing its query; a miss yields ConstraintUnsatisfiable.
Result<FixtureSet> BuildFixtureData(std::string_view id);

// CREATE TABLE statement including collations.
std::string TableDdl(const TableDef& table);

// Writes <dir>/<id>/schema.sql and <dir>/<id>/rows.json.
Status WriteFixtureFiles(const FixtureSet& fixture, const std::filesystem::path& dir);

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  bool ordered = false;  // statement has ORDER BY

  // Cells joined by ": " within a row, rows joined by ", ".
  std::string ToText() const;
};

// Column list and leading rows of one table, captured at load time.
struct TableSummary {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::vector<Cell>> sample_rows;
};

// An in-memory database that only accepts single read-only SELECT
// statements once loaded. Execute() may be called from several threads;
// calls are serialized.
class Database {
 public:
  static constexpr int kMaxSampleRows = 3;

  static Result<std::shared_ptr<Database>> Open(const FixtureSet& fixture);
  // Executes <dir>/schema.sql, then inserts <dir>/rows.json.
  static Result<std::shared_ptr<Database>> OpenFromFiles(const std::filesystem::path& dir);

  ~Database();
  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;

  const std::string& fixture_id() const { return id_; }
  const std::vector<TableSummary>& tables() const { return tables_; }

  // Errors: NotASelect, SqlError, Timeout.
  Result<ResultTable> Execute(std::string_view sql) const;

  void set_timeout(std::chrono::milliseconds t) { timeout_ = t; }
  std::chrono::milliseconds timeout() const { return timeout_; }

 private:
  Database() = default;
  Status Seal();
  static int Authorize(void* self, int action, const char*, const char*, const char*,
                       const char*);
  static int Progress(void* self);

  std::string id_;
  sqlite3* db_ = nullptr;
  std::vector<TableSummary> tables_;
  std::chrono::milliseconds timeout_{2000};
  mutable std::mutex mu_;
  mutable std::chrono::steady_clock::time_point deadline_;
};

// Builds and opens a shipped fixture. Errors: UnknownFixture.
Result<std::shared_ptr<Database>> LoadFixture(std::string_view id);

}  // namespace toolplan

#endif  // TOOLPLAN_SQL_WORKBENCH_H_
