#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2sql/evaluator.hpp"
#include "nl2sql/llm_gateway.hpp"
#include "nl2sql/prompts.hpp"
#include "nl2sql/query_rewriter.hpp"
#include "nl2sql/schema_catalog.hpp"
#include "nl2sql/schema_linker.hpp"
#include "nl2sql/sql_booster.hpp"
#include "nl2sql/sql_executor.hpp"
#include "nl2sql/sql_generator.hpp"
#include "nl2sql/text2function.hpp"
#include "nl2sql/text2python.hpp"

namespace nl2sql {

enum class Backend { sql, function, script };

std::string_view to_string(Backend backend);
Backend backend_from_string(std::string_view text);

struct StageSwitches {
  bool rewrite = true;
  bool link = true;
  bool boost = true;
};

struct PipelineConfig {
  StageSwitches stages;
  Backend backend = Backend::sql;
  int max_boost_attempts = kDefaultMaxAttempts;
  LlmSettings llm;

  std::optional<std::filesystem::path> prompt_dir;
  std::optional<std::filesystem::path> trace_dir;
  std::optional<std::filesystem::path> annotations;
  std::optional<std::filesystem::path> glossary;

  // Fixed wall clock ("YYYY-MM-DD HH:MM"); the system clock when unset.
  std::optional<std::string> now;
  std::optional<std::string> location;
  std::chrono::minutes recent_window{15};
  ReplaceMode replace_mode = ReplaceMode::local;

  CatalogOptions catalog;
  ExecutorOptions executor;

  std::optional<std::filesystem::path> interpreter_path;
  std::chrono::milliseconds script_timeout{30'000};
  // Root for per-question CSV exports; a temporary directory when unset.
  std::optional<std::filesystem::path> script_workdir;

  bool include_timings = false;

  // Throws Error(Config).
  void validate() const;

  // Unknown keys are rejected. Relative paths resolve against `base_dir`.
  static PipelineConfig from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir = {});
  static PipelineConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
};

struct StageError {
  std::string stage;
  ErrorCode code;
  std::string message;
};

// Everything one question went through. Stage sections always serialize in
// rewrite, link, generate, boost order, whether or not a stage ran.
struct AnswerRecord {
  std::string question;
  std::string db;
  Backend backend = Backend::sql;
  StageSwitches stages;

  std::optional<RewriteResult> rewrite;
  std::string effective_question;

  std::optional<LinkResult> link;
  bool used_all_tables = false;

  std::optional<SqlCandidate> initial;
  std::optional<FunctionCall> function_call;
  std::optional<CallValidation> call_validation;
  std::vector<TableExport> exports;
  std::optional<std::filesystem::path> script_workdir;

  std::optional<BoostTrace> boost;

  std::string final_code;
  std::optional<ExecutionOutcome> final_outcome;
  std::string failure_reason;
  std::optional<StageError> error;

  TokenUsage usage;
  std::size_t llm_calls = 0;
  std::map<std::string, std::chrono::milliseconds> timings;

  bool answered() const { return final_outcome && final_outcome->ok(); }
  nlohmann::json to_json(bool include_timings = false) const;
};

nlohmann::json outcome_to_json(const ExecutionOutcome& outcome, bool include_timings = false);

// Dumps JSON deterministically, replacing invalid UTF-8.
std::string dump_json(const nlohmann::json& j);

// Aligned text rendering of a result table.
std::string format_table(const ExecutionOutcome& outcome, std::size_t max_rows = 50);

class Pipeline {
 public:
  // Throws Error(Config) for invalid configuration.
  Pipeline(PipelineConfig config, LlmClient& llm);

  // Stage failures land in the record; only configuration problems throw.
  AnswerRecord run_question(std::string_view question, const std::filesystem::path& db,
                            std::string_view trace_name = {});

  // Adapter for the evaluator.
  Prediction predict(const EvalCase& eval_case);

  std::shared_ptr<const DatabaseCatalog> catalog_for(const std::filesystem::path& db,
                                                     Warnings* warnings = nullptr);
  const PipelineConfig& config() const { return config_; }
  const PromptLibrary& prompts() const { return prompts_; }
  RewriteContext rewrite_context() const;

 private:
  void run_stages(AnswerRecord& record, const Database& db, const DatabaseCatalog& catalog,
                  Model& model);
  std::filesystem::path make_script_workdir(std::string_view question,
                                            std::string_view trace_name);
  std::optional<std::filesystem::path> write_trace(const AnswerRecord& record,
                                                   std::string_view trace_name) const;

  PipelineConfig config_;
  LlmClient& llm_;
  PromptLibrary prompts_;
  std::map<std::string, std::string> glossary_;
  std::optional<Annotations> annotations_;
  std::mutex catalog_mutex_;
  std::map<std::string, std::shared_ptr<const DatabaseCatalog>> catalogs_;
};

}  // namespace nl2sql
