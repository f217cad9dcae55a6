#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nl2sql/database.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/llm_gateway.hpp"
#include "nl2sql/prompts.hpp"
#include "nl2sql/schema_catalog.hpp"
#include "nl2sql/sql_executor.hpp"
#include "nl2sql/sql_generator.hpp"

namespace nl2sql {

// The environment a candidate is executed in: SQL on a database, or a
// script in an interpreter. Both report ExecutionOutcome.
class ExecutionEnvironment {
 public:
  virtual ~ExecutionEnvironment() = default;
  virtual ExecutionOutcome execute(std::string_view code) = 0;
  // Pulls the next candidate out of a model reply.
  virtual std::string extract(std::string_view reply) const = 0;
  virtual std::string_view language() const = 0;
};

class SqlEnvironment : public ExecutionEnvironment {
 public:
  explicit SqlEnvironment(const Database& db, ExecutorOptions options = {})
      : db_(db), options_(options) {}

  ExecutionOutcome execute(std::string_view code) override {
    return execute_readonly(code, db_, options_);
  }
  std::string extract(std::string_view reply) const override { return extract_sql(reply); }
  std::string_view language() const override { return "SQL"; }

 private:
  const Database& db_;
  ExecutorOptions options_;
};

enum class Termination { success_nonempty, max_attempts_exhausted };

std::string_view to_string(Termination termination);

struct BoostAttempt {
  SqlCandidate candidate;
  ExecutionOutcome outcome;
};

struct BoostTrace {
  std::vector<BoostAttempt> attempts;
  Termination termination = Termination::max_attempts_exhausted;
  SqlCandidate final;
  std::optional<std::string> error_note;  // set when the loop stopped on an error
  std::optional<ErrorCode> error_code;
};

inline constexpr int kDefaultMaxAttempts = 3;
inline constexpr std::string_view kEmptyResultNotice =
    "The statement ran successfully but returned an empty result (no rows, or only NULL "
    "values). The filter values or the chosen columns are probably wrong.";

struct RepairContext {
  std::string question;
  std::string schema_block;
};

// Throws Error(PreconditionViolated) for a successful non-empty outcome.
std::string build_repair_prompt(const SqlCandidate& previous, const ExecutionOutcome& outcome,
                                std::string_view schema_block, std::string_view question = {},
                                std::string_view language = "SQL",
                                const PromptLibrary& prompts = PromptLibrary::builtin());

// Executes candidates until one succeeds with a non-empty result or
// max_attempts candidates (the initial one included) have run.
BoostTrace boost(const SqlCandidate& initial, ExecutionEnvironment& env,
                 const RepairContext& context, Model& model,
                 int max_attempts = kDefaultMaxAttempts,
                 const PromptLibrary& prompts = PromptLibrary::builtin());

// SQL on `db`, with every catalog table in the repair prompt.
BoostTrace boost(const SqlCandidate& initial, const Database& db, const DatabaseCatalog& catalog,
                 Model& model, int max_attempts = kDefaultMaxAttempts);

}  // namespace nl2sql
