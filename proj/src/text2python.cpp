#include "nl2sql/text2python.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "nl2sql/errors.hpp"
#include "nl2sql/sql_lexer.hpp"

namespace nl2sql {

namespace fs = std::filesystem;
namespace chr = std::chrono;

std::vector<TableExport> export_tables_csv(const Database& db, const DatabaseCatalog& catalog,
                                           const SchemaLinks* links, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());

  std::vector<const TableDescriptor*> tables;
  if (links == nullptr || links->empty()) {
    for (const auto& t : catalog.tables()) tables.push_back(&t);
  } else {
    const auto linked = links->tables();
    for (const auto& t : catalog.tables()) {
      if (std::any_of(linked.begin(), linked.end(),
                      [&](const std::string& n) { return iequals(n, t.name); })) {
        tables.push_back(&t);
      }
    }
  }

  std::vector<TableExport> exports;
  for (const auto* table : tables) {
    TableExport ex{table->name, dir / (table->name + ".csv"), 0};
    std::ofstream out(ex.path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + ex.path.string());

    std::vector<std::optional<std::string>> header;
    std::string select = "SELECT ";
    for (std::size_t i = 0; i < table->columns.size(); ++i) {
      header.emplace_back(table->columns[i].name);
      if (i > 0) select += ", ";
      select += quote_identifier(table->columns[i].name);
    }
    write_csv_row(out, header);
    select += " FROM " + quote_identifier(table->name);

    try {
      Statement stmt(db, select);
      while (stmt.step()) {
        std::vector<std::optional<std::string>> fields;
        for (const auto& v : stmt.row()) {
          fields.push_back(is_null(v) ? std::nullopt : std::optional(render_value(v)));
        }
        write_csv_row(out, fields);
        ++ex.row_count;
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::Io, "export of " + table->name + " failed: " + e.what());
    }
    if (!out.flush()) throw Error(ErrorCode::Io, "write failed for " + ex.path.string());
    exports.push_back(std::move(ex));
  }
  return exports;
}

std::string prompt_path(const TableExport& exported) {
  return "./" + exported.path.filename().string();
}

GenerationPrompt build_script_prompt(std::string_view question,
                                     const std::vector<TableExport>& exports,
                                     const DatabaseCatalog& catalog,
                                     const PromptLibrary& prompts) {
  if (exports.empty()) {
    throw Error(ErrorCode::PreconditionViolated, "script prompt needs at least one exported table");
  }
  SchemaLinks tables_only;
  EnrichedOptions options;
  for (const auto& ex : exports) {
    const auto* table = catalog.find_table(ex.table);
    if (table == nullptr || table->columns.empty()) {
      throw Error(ErrorCode::UnresolvedLink, "exported table not in catalog: " + ex.table);
    }
    tables_only.add({table->name, table->columns.front().name});
    options.table_labels[table->name] = "File " + prompt_path(ex) + " (table " + table->name + ")";
  }
  return {trim(prompts.get("generate_python_instruction")),
          render_enriched(catalog, &tables_only, options), std::string(question)};
}

std::optional<fs::path> find_interpreter(const fs::path& interpreter) {
  if (interpreter.empty()) return std::nullopt;
  if (interpreter.string().find('/') != std::string::npos) {
    if (::access(interpreter.c_str(), X_OK) == 0 && !fs::is_directory(interpreter)) {
      return interpreter;
    }
    return std::nullopt;
  }
  const char* path_env = std::getenv("PATH");
  std::string_view paths = path_env != nullptr ? path_env : "/usr/bin:/bin";
  while (!paths.empty()) {
    const auto colon = paths.find(':');
    const auto dir = paths.substr(0, colon);
    const fs::path candidate = fs::path(dir.empty() ? "." : std::string(dir)) / interpreter;
    if (::access(candidate.c_str(), X_OK) == 0 && !fs::is_directory(candidate)) return candidate;
    if (colon == std::string_view::npos) break;
    paths.remove_prefix(colon + 1);
  }
  return std::nullopt;
}

namespace {

struct Pipe {
  int fds[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(ErrorCode::Io, "pipe failed");
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  void close_read() {
    if (fds[0] >= 0) ::close(fds[0]);
    fds[0] = -1;
  }
  void close_write() {
    if (fds[1] >= 0) ::close(fds[1]);
    fds[1] = -1;
  }
};

}  // namespace

ScriptOutcome execute_script(std::string_view code, const fs::path& workdir,
                             const fs::path& interpreter, chr::milliseconds timeout) {
  const auto resolved = find_interpreter(interpreter);
  if (!resolved) {
    throw Error(ErrorCode::InterpreterMissing, "interpreter not found: " + interpreter.string());
  }
  if (!fs::is_directory(workdir)) {
    throw Error(ErrorCode::Io, "script working directory missing: " + workdir.string());
  }
  {
    std::ofstream script(workdir / kScriptFileName, std::ios::binary | std::ios::trunc);
    script << code;
    if (!script.flush()) throw Error(ErrorCode::Io, "cannot write script into " + workdir.string());
  }

  Pipe out_pipe;
  Pipe err_pipe;
  const auto started = chr::steady_clock::now();
  const std::string interp = resolved->string();
  const std::string wd = workdir.string();
  const std::string script_name(kScriptFileName);

  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::Io, std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(out_pipe.fds[1], STDOUT_FILENO);
    ::dup2(err_pipe.fds[1], STDERR_FILENO);
    if (::chdir(wd.c_str()) != 0) ::_exit(126);
    const int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    std::array<char*, 3> argv{const_cast<char*>(interp.c_str()),
                              const_cast<char*>(script_name.c_str()), nullptr};
    ::execv(interp.c_str(), argv.data());
    ::_exit(127);
  }
  out_pipe.close_write();
  err_pipe.close_write();

  ScriptOutcome outcome;
  std::array<pollfd, 2> fds{pollfd{out_pipe.fds[0], POLLIN, 0}, pollfd{err_pipe.fds[0], POLLIN, 0}};
  std::array<std::string*, 2> sinks{&outcome.stdout_text, &outcome.stderr_text};
  const auto deadline = started + timeout;
  int open_fds = 2;
  char buf[8192];
  while (open_fds > 0) {
    const auto left = chr::duration_cast<chr::milliseconds>(deadline - chr::steady_clock::now());
    if (left.count() <= 0) {
      outcome.timed_out = true;
      break;
    }
    const int rc = ::poll(fds.data(), fds.size(), static_cast<int>(left.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc <= 0) continue;
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (fds[i].fd < 0 || fds[i].revents == 0) continue;
      const auto n = ::read(fds[i].fd, buf, sizeof buf);
      if (n > 0) {
        sinks[i]->append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || errno != EINTR) {
        fds[i].fd = -1;
        --open_fds;
      }
    }
  }
  if (outcome.timed_out) ::kill(-pid, SIGKILL);

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  outcome.elapsed = chr::duration_cast<chr::milliseconds>(chr::steady_clock::now() - started);
  if (WIFEXITED(status)) outcome.exit_code = WEXITSTATUS(status);

  if (outcome.timed_out) {
    outcome.status = ExecStatus::fail;
    if (!outcome.stderr_text.empty() && outcome.stderr_text.back() != '\n') {
      outcome.stderr_text += '\n';
    }
    outcome.stderr_text += "script timed out after " + std::to_string(timeout.count()) + " ms";
    return outcome;
  }
  if (!outcome.exit_code || *outcome.exit_code != 0) {
    outcome.status = ExecStatus::fail;
    if (trim(outcome.stderr_text).empty()) {
      outcome.stderr_text = outcome.exit_code
                                ? "script exited with status " + std::to_string(*outcome.exit_code)
                                : "script terminated by a signal";
    }
    return outcome;
  }
  outcome.status = ExecStatus::success;
  try {
    outcome.parsed_rows = parse_csv(outcome.stdout_text);
  } catch (const Error&) {
    outcome.parsed_rows.reset();
  }
  return outcome;
}

ExecutionOutcome to_execution_outcome(const ScriptOutcome& script) {
  if (script.status == ExecStatus::fail) {
    return ExecutionOutcome::failure(trim(script.stderr_text), script.elapsed);
  }
  if (!script.parsed_rows) {
    return ExecutionOutcome::failure(
        "script output is not CSV with a header row: " +
            truncate_utf8(trim(script.stdout_text), 200),
        script.elapsed);
  }
  ExecutionOutcome out;
  out.status = ExecStatus::success;
  out.elapsed = script.elapsed;
  out.columns = script.parsed_rows->header;
  for (const auto& r : script.parsed_rows->rows) {
    Row row;
    for (const auto& cell : r) {
      if (cell) {
        row.emplace_back(*cell);
      } else {
        row.emplace_back(std::monostate{});
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

ExecutionOutcome ScriptEnvironment::execute(std::string_view code) {
  last_ = execute_script(code, workdir_, interpreter_, timeout_);
  return to_execution_outcome(*last_);
}

}  // namespace nl2sql
