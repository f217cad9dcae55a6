#include "nl2sql/database.hpp"

#include <sqlite3.h>

#include <cmath>
#include <cstdio>
#include <system_error>

#include "nl2sql/errors.hpp"

namespace nl2sql {

std::string render_real(double d) {
  if (std::isnan(d)) return "NaN";
  if (std::isinf(d)) return d > 0 ? "Inf" : "-Inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", d);
  std::string out(buf);
  if (out.find_first_of(".eE") == std::string::npos) out += ".0";
  return out;
}

std::string render_value(const Value& v) {
  struct Visitor {
    std::string operator()(std::monostate) const { return {}; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const { return render_real(d); }
    std::string operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, v);
}

void Database::Closer::operator()(sqlite3* db) const { sqlite3_close_v2(db); }

Database Database::open_readonly(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorCode::UnreadableDatabase, "database file not found: " + path.string());
  }
  sqlite3* raw = nullptr;
  const int rc = sqlite3_open_v2(path.c_str(), &raw, SQLITE_OPEN_READONLY, nullptr);
  std::unique_ptr<sqlite3, Closer> db(raw);
  if (rc != SQLITE_OK) {
    throw Error(ErrorCode::UnreadableDatabase,
                "cannot open " + path.string() + ": " +
                    (raw != nullptr ? sqlite3_errmsg(raw) : sqlite3_errstr(rc)));
  }
  // Opening is lazy; touch the schema so corrupt files fail here.
  char* err = nullptr;
  if (sqlite3_exec(raw, "SELECT count(*) FROM sqlite_master", nullptr, nullptr, &err) !=
      SQLITE_OK) {
    std::string msg = err != nullptr ? err : "unknown error";
    sqlite3_free(err);
    throw Error(ErrorCode::UnreadableDatabase, "cannot read " + path.string() + ": " + msg);
  }
  sqlite3_exec(raw, "PRAGMA query_only = 1", nullptr, nullptr, nullptr);
  return Database(std::move(db), path);
}

Database Database::open_readwrite(const std::filesystem::path& path) {
  sqlite3* raw = nullptr;
  const int rc = sqlite3_open_v2(path.c_str(), &raw,
                                 SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr);
  std::unique_ptr<sqlite3, Closer> db(raw);
  if (rc != SQLITE_OK) {
    throw Error(ErrorCode::UnreadableDatabase,
                "cannot open " + path.string() + ": " +
                    (raw != nullptr ? sqlite3_errmsg(raw) : sqlite3_errstr(rc)));
  }
  return Database(std::move(db), path);
}

void Database::exec_script(std::string_view sql) const {
  char* err = nullptr;
  const std::string text(sql);
  if (sqlite3_exec(db_.get(), text.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err != nullptr ? err : "unknown error";
    sqlite3_free(err);
    throw Error(ErrorCode::Io, "script failed on " + path_.string() + ": " + msg);
  }
}

void Statement::Finalizer::operator()(sqlite3_stmt* stmt) const { sqlite3_finalize(stmt); }

Statement::Statement(const Database& db, std::string_view sql) : db_(db.handle()) {
  sqlite3_stmt* raw = nullptr;
  const int rc = sqlite3_prepare_v2(db_, sql.data(), static_cast<int>(sql.size()), &raw,
                                    nullptr);
  stmt_.reset(raw);
  if (rc != SQLITE_OK) throw Error(ErrorCode::Io, sqlite3_errmsg(db_));
  if (raw == nullptr) throw Error(ErrorCode::Io, "empty statement");
}

bool Statement::step() {
  const int rc = sqlite3_step(stmt_.get());
  if (rc == SQLITE_ROW) return true;
  if (rc == SQLITE_DONE) return false;
  throw Error(ErrorCode::Io, sqlite3_errmsg(db_));
}

int Statement::column_count() const { return sqlite3_column_count(stmt_.get()); }

std::string Statement::column_name(int i) const {
  const char* name = sqlite3_column_name(stmt_.get(), i);
  return name != nullptr ? name : "";
}

Value Statement::column(int i) const {
  auto* s = stmt_.get();
  switch (sqlite3_column_type(s, i)) {
    case SQLITE_INTEGER:
      return static_cast<std::int64_t>(sqlite3_column_int64(s, i));
    case SQLITE_FLOAT:
      return sqlite3_column_double(s, i);
    case SQLITE_TEXT: {
      const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(s, i));
      return std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(s, i)));
    }
    case SQLITE_BLOB: {
      const auto* data = static_cast<const char*>(sqlite3_column_blob(s, i));
      return std::string(data, static_cast<std::size_t>(sqlite3_column_bytes(s, i)));
    }
    default:
      return std::monostate{};
  }
}

Row Statement::row() const {
  Row out;
  const int n = column_count();
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(column(i));
  return out;
}

bool Statement::readonly() const { return sqlite3_stmt_readonly(stmt_.get()) != 0; }

std::string quote_identifier(std::string_view name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace nl2sql
