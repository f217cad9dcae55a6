#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2sql/llm_gateway.hpp"
#include "nl2sql/sql_executor.hpp"

namespace nl2sql {

enum class Difficulty { easy, medium, hard };

std::string_view to_string(Difficulty d);
std::optional<Difficulty> difficulty_from_string(std::string_view text);

// hard: more than one distinct table (FROM/JOIN, subqueries included, CTE
// names excluded); medium: an aggregate (SUM, AVG, COUNT, MIN, MAX);
// otherwise easy. Throws Error(UnparseableSql).
Difficulty classify_difficulty(std::string_view sql);

// Distinct base tables the statement reads, lower-cased.
std::vector<std::string> referenced_tables(std::string_view sql);

inline constexpr double kRealTolerance = 1e-6;

// Execution-accuracy match: bag semantics over normalized values, ordered
// only when the gold SQL has a top-level ORDER BY, column names ignored.
bool compare_results(const ExecutionOutcome& pred, const ExecutionOutcome& gold,
                     std::string_view gold_sql);

struct EvalCase {
  std::string id;
  std::string question;
  std::string gold_sql;
  std::filesystem::path db;
  std::optional<Difficulty> difficulty;
};

// JSON Lines {id, question, gold_sql, db, difficulty?}; relative db paths are
// resolved against the dataset's directory.
std::vector<EvalCase> load_dataset(const std::filesystem::path& path);

struct Prediction {
  std::string code;  // SQL, compiled function call, or script
  std::optional<ExecutionOutcome> outcome;
  std::string failure_reason;
  TokenUsage usage;
  std::string trace_ref;
};

using Predictor = std::function<Prediction(const EvalCase&)>;

struct CaseResult {
  EvalCase eval_case;
  Difficulty tier = Difficulty::easy;
  std::string predicted;
  bool match = false;
  std::string reason;
  TokenUsage usage;
  std::string trace_ref;
};

struct TierCount {
  std::size_t total = 0;
  std::size_t matches = 0;
};

struct EvalReport {
  std::vector<CaseResult> cases;  // sorted by case id
  std::optional<double> ex_overall;
  std::map<Difficulty, TierCount> tiers;
  TokenUsage usage;

  std::optional<double> ex_for(Difficulty tier) const;
  std::size_t matches() const;
  nlohmann::json to_json() const;
  // Tiers by rows, EX per tier plus overall.
  std::string summary_table() const;
};

struct EvalOptions {
  std::size_t workers = 1;
  ExecutorOptions executor;
};

// Per-case failures count as mismatches; the run itself never aborts.
EvalReport evaluate(const std::vector<EvalCase>& dataset, const Predictor& predictor,
                    const EvalOptions& options = {});

}  // namespace nl2sql
