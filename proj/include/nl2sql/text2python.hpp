#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nl2sql/csv.hpp"
#include "nl2sql/database.hpp"
#include "nl2sql/prompts.hpp"
#include "nl2sql/schema_catalog.hpp"
#include "nl2sql/sql_booster.hpp"
#include "nl2sql/sql_executor.hpp"
#include "nl2sql/sql_generator.hpp"

namespace nl2sql {

struct TableExport {
  std::string table;
  std::filesystem::path path;
  std::size_t row_count = 0;
};

// One <table>.csv per linked table (every table when links are null or
// empty), header in catalog column order, rows in natural order.
// Throws Error(Io).
std::vector<TableExport> export_tables_csv(const Database& db, const DatabaseCatalog& catalog,
                                           const SchemaLinks* links,
                                           const std::filesystem::path& dir);

// How an export is referred to in the prompt: relative to the script's
// working directory.
std::string prompt_path(const TableExport& exported);

// The SQL generation prompt with the Python instruction and CSV file paths
// in place of table names.
GenerationPrompt build_script_prompt(std::string_view question,
                                     const std::vector<TableExport>& exports,
                                     const DatabaseCatalog& catalog,
                                     const PromptLibrary& prompts = PromptLibrary::builtin());

struct ScriptOutcome {
  ExecStatus status = ExecStatus::fail;
  std::string stdout_text;
  std::string stderr_text;
  std::optional<CsvTable> parsed_rows;
  std::optional<int> exit_code;
  bool timed_out = false;
  std::chrono::milliseconds elapsed{0};
};

// Resolves a bare name through PATH. nullopt when nothing executable exists.
std::optional<std::filesystem::path> find_interpreter(const std::filesystem::path& interpreter);

inline constexpr std::string_view kScriptFileName = "generated_script.py";

// Runs `code` with the interpreter inside `workdir`. Throws
// Error(InterpreterMissing) when the interpreter cannot be found.
ScriptOutcome execute_script(std::string_view code, const std::filesystem::path& workdir,
                             const std::filesystem::path& interpreter,
                             std::chrono::milliseconds timeout);

// Success requires CSV on stdout; parsed cells become text or NULL values.
ExecutionOutcome to_execution_outcome(const ScriptOutcome& script);

class ScriptEnvironment : public ExecutionEnvironment {
 public:
  ScriptEnvironment(std::filesystem::path workdir, std::filesystem::path interpreter,
                    std::chrono::milliseconds timeout)
      : workdir_(std::move(workdir)), interpreter_(std::move(interpreter)), timeout_(timeout) {}

  ExecutionOutcome execute(std::string_view code) override;
  std::string extract(std::string_view reply) const override { return extract_code(reply); }
  std::string_view language() const override { return "Python"; }

  const std::optional<ScriptOutcome>& last() const { return last_; }

 private:
  std::filesystem::path workdir_;
  std::filesystem::path interpreter_;
  std::chrono::milliseconds timeout_;
  std::optional<ScriptOutcome> last_;
};

}  // namespace nl2sql
