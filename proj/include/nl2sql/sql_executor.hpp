#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nl2sql/database.hpp"

namespace nl2sql {

enum class ExecStatus { success, fail };

std::string_view to_string(ExecStatus status);

// What the environment reports back for one candidate. A failure is data,
// not an exception: fail carries the engine's message and no rows.
struct ExecutionOutcome {
  ExecStatus status = ExecStatus::fail;
  std::optional<std::string> error_message;
  std::vector<std::string> columns;
  std::vector<Row> rows;
  bool truncated = false;
  std::chrono::milliseconds elapsed{0};

  bool ok() const { return status == ExecStatus::success; }

  static ExecutionOutcome failure(std::string message, std::chrono::milliseconds elapsed = {});
};

// Accepts exactly one statement led by SELECT or WITH. Throws
// Error(ForbiddenStatement) naming the offending keyword otherwise.
void guard_statement(std::string_view sql);

struct ExecutorOptions {
  std::chrono::milliseconds timeout{10'000};
  std::size_t row_cap = 10'000;
};

// Runs a guarded statement on a read-only connection. Rejections, engine
// errors and timeouts all come back as fail outcomes.
ExecutionOutcome execute_readonly(std::string_view sql, const Database& db,
                                  const ExecutorOptions& options = {});

// Zero rows, or a single row of NULLs (an aggregate over nothing).
// Throws Error(InvalidOnFailure) for fail outcomes.
bool is_empty(const ExecutionOutcome& outcome);

}  // namespace nl2sql
