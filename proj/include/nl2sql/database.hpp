#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

struct sqlite3;
struct sqlite3_stmt;

namespace nl2sql {

// A single cell. Blobs are carried as raw bytes in the string alternative.
using Value = std::variant<std::monostate, std::int64_t, double, std::string>;
using Row = std::vector<Value>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

// Text form used in prompts, CSV files and result tables. NULL renders empty.
std::string render_value(const Value& v);
std::string render_real(double d);

// Owning handle over one SQLite connection.
class Database {
 public:
  static Database open_readonly(const std::filesystem::path& path);
  // Creates the file when missing. Used for fixtures and demo data.
  static Database open_readwrite(const std::filesystem::path& path);

  sqlite3* handle() const { return db_.get(); }
  const std::filesystem::path& path() const { return path_; }

  // Runs a multi-statement script; throws Error(Io) on failure.
  void exec_script(std::string_view sql) const;

 private:
  struct Closer {
    void operator()(sqlite3* db) const;
  };

  Database(std::unique_ptr<sqlite3, Closer> db, std::filesystem::path path)
      : db_(std::move(db)), path_(std::move(path)) {}

  std::unique_ptr<sqlite3, Closer> db_;
  std::filesystem::path path_;
};

// Prepared statement; step() returns false once rows are exhausted.
class Statement {
 public:
  Statement(const Database& db, std::string_view sql);

  bool step();
  int column_count() const;
  std::string column_name(int i) const;
  Value column(int i) const;
  Row row() const;
  bool readonly() const;
  sqlite3_stmt* handle() const { return stmt_.get(); }

 private:
  struct Finalizer {
    void operator()(sqlite3_stmt* stmt) const;
  };

  sqlite3* db_;
  std::unique_ptr<sqlite3_stmt, Finalizer> stmt_;
};

// Identifier quoting for generated statements.
std::string quote_identifier(std::string_view name);

}  // namespace nl2sql
