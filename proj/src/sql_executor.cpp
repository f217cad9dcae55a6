#include "nl2sql/sql_executor.hpp"

#include <sqlite3.h>

#include <algorithm>

#include "nl2sql/errors.hpp"
#include "nl2sql/sql_lexer.hpp"

namespace nl2sql {

namespace chr = std::chrono;

std::string_view to_string(ExecStatus status) {
  return status == ExecStatus::success ? "success" : "fail";
}

ExecutionOutcome ExecutionOutcome::failure(std::string message, chr::milliseconds elapsed) {
  ExecutionOutcome out;
  out.status = ExecStatus::fail;
  out.error_message = message.empty() ? std::string("unknown error") : std::move(message);
  out.elapsed = elapsed;
  return out;
}

void guard_statement(std::string_view sql) {
  std::vector<Token> tokens;
  try {
    tokens = tokenize_sql(sql);
  } catch (const Error& e) {
    throw Error(ErrorCode::ForbiddenStatement, std::string("unparseable statement: ") + e.what());
  }
  while (!tokens.empty() && tokens.back().kind == TokenKind::Semicolon) tokens.pop_back();
  if (tokens.empty()) throw Error(ErrorCode::ForbiddenStatement, "empty statement");
  if (std::any_of(tokens.begin(), tokens.end(),
                  [](const Token& t) { return t.kind == TokenKind::Semicolon; })) {
    throw Error(ErrorCode::ForbiddenStatement, "multiple statements");
  }
  const auto& lead = tokens.front();
  if (!lead.is_keyword("SELECT") && !lead.is_keyword("WITH")) {
    throw Error(ErrorCode::ForbiddenStatement, to_upper(lead.text));
  }
  // WITH ... DELETE/UPDATE/INSERT is legal SQLite; reject any top-level writer.
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.depth != 0 || t.kind != TokenKind::Word) continue;
    // replace(...) and friends are functions, not statements.
    if (i + 1 < tokens.size() && tokens[i + 1].text == "(") continue;
    for (const char* kw : {"INSERT", "UPDATE", "DELETE", "REPLACE", "CREATE", "DROP", "ALTER",
                           "ATTACH", "DETACH", "PRAGMA", "VACUUM", "REINDEX"}) {
      if (t.is_keyword(kw)) throw Error(ErrorCode::ForbiddenStatement, kw);
    }
  }
}

namespace {

struct Deadline {
  chr::steady_clock::time_point until;
};

int progress_check(void* arg) {
  const auto* deadline = static_cast<const Deadline*>(arg);
  return chr::steady_clock::now() >= deadline->until ? 1 : 0;
}

}  // namespace

ExecutionOutcome execute_readonly(std::string_view sql, const Database& db,
                                  const ExecutorOptions& options) {
  const auto started = chr::steady_clock::now();
  const auto elapsed = [&] {
    return chr::duration_cast<chr::milliseconds>(chr::steady_clock::now() - started);
  };
  try {
    guard_statement(sql);
  } catch (const Error& e) {
    return ExecutionOutcome::failure(std::string("forbidden statement: ") + e.what(), elapsed());
  }

  sqlite3* handle = db.handle();
  sqlite3_stmt* raw = nullptr;
  if (sqlite3_prepare_v2(handle, sql.data(), static_cast<int>(sql.size()), &raw, nullptr) !=
      SQLITE_OK) {
    sqlite3_finalize(raw);
    return ExecutionOutcome::failure(sqlite3_errmsg(handle), elapsed());
  }
  std::unique_ptr<sqlite3_stmt, int (*)(sqlite3_stmt*)> stmt(raw, sqlite3_finalize);
  if (stmt == nullptr) return ExecutionOutcome::failure("empty statement", elapsed());
  if (sqlite3_stmt_readonly(stmt.get()) == 0) {
    return ExecutionOutcome::failure("statement is not read-only", elapsed());
  }

  Deadline deadline{started + options.timeout};
  sqlite3_progress_handler(handle, 1000, progress_check, &deadline);
  struct ResetHandler {
    sqlite3* h;
    ~ResetHandler() { sqlite3_progress_handler(h, 0, nullptr, nullptr); }
  } reset{handle};

  ExecutionOutcome out;
  out.status = ExecStatus::success;
  const int ncols = sqlite3_column_count(stmt.get());
  for (int i = 0; i < ncols; ++i) {
    const char* name = sqlite3_column_name(stmt.get(), i);
    out.columns.emplace_back(name != nullptr ? name : "");
  }
  for (;;) {
    const int rc = sqlite3_step(stmt.get());
    if (rc == SQLITE_DONE) break;
    if (rc == SQLITE_INTERRUPT || (rc != SQLITE_ROW && chr::steady_clock::now() >= deadline.until)) {
      return ExecutionOutcome::failure(
          "query timed out after " + std::to_string(options.timeout.count()) + " ms", elapsed());
    }
    if (rc != SQLITE_ROW) return ExecutionOutcome::failure(sqlite3_errmsg(handle), elapsed());
    if (out.rows.size() >= options.row_cap) {
      out.truncated = true;
      break;
    }
    Row row;
    row.reserve(static_cast<std::size_t>(ncols));
    for (int i = 0; i < ncols; ++i) {
      switch (sqlite3_column_type(stmt.get(), i)) {
        case SQLITE_INTEGER:
          row.emplace_back(static_cast<std::int64_t>(sqlite3_column_int64(stmt.get(), i)));
          break;
        case SQLITE_FLOAT:
          row.emplace_back(sqlite3_column_double(stmt.get(), i));
          break;
        case SQLITE_NULL:
          row.emplace_back(std::monostate{});
          break;
        default: {
          const auto* bytes = static_cast<const char*>(sqlite3_column_blob(stmt.get(), i));
          const auto n = static_cast<std::size_t>(sqlite3_column_bytes(stmt.get(), i));
          row.emplace_back(bytes != nullptr ? std::string(bytes, n) : std::string());
        }
      }
    }
    out.rows.push_back(std::move(row));
  }
  out.elapsed = elapsed();
  return out;
}

bool is_empty(const ExecutionOutcome& outcome) {
  if (!outcome.ok()) {
    throw Error(ErrorCode::InvalidOnFailure, "is_empty is undefined for a failed execution");
  }
  if (outcome.rows.empty()) return true;
  return outcome.rows.size() == 1 &&
         std::all_of(outcome.rows.front().begin(), outcome.rows.front().end(),
                     [](const Value& v) { return is_null(v); });
}

}  // namespace nl2sql
