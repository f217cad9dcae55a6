#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nl2sql/database.hpp"
#include "nl2sql/llm_gateway.hpp"
#include "nl2sql/prompts.hpp"
#include "nl2sql/schema_catalog.hpp"
#include "nl2sql/schema_links.hpp"

namespace nl2sql {

enum class FunctionTemplate {
  get_specific_columns,
  get_sorted_values_based_on_condition,
  get_aggregated_value,
  get_distinct_grouped,
};

inline constexpr FunctionTemplate kAllFunctionTemplates[] = {
    FunctionTemplate::get_specific_columns,
    FunctionTemplate::get_sorted_values_based_on_condition,
    FunctionTemplate::get_aggregated_value,
    FunctionTemplate::get_distinct_grouped,
};

std::string_view to_string(FunctionTemplate t);
std::optional<FunctionTemplate> function_template_from_string(std::string_view name);
// "get_specific_columns(columns, table, condition)"
std::string_view signature(FunctionTemplate t);

// Only the arguments of the chosen template are meaningful; the parser
// rejects any argument the template does not declare.
struct FunctionCall {
  FunctionTemplate function = FunctionTemplate::get_specific_columns;
  std::vector<std::string> columns;  // get_specific_columns, get_distinct_grouped
  std::vector<std::string> values;   // get_sorted_values_based_on_condition
  std::string calculation;           // get_aggregated_value
  std::string table;
  std::optional<std::string> condition;
  std::optional<std::string> order_by;
  std::optional<std::int64_t> limit;
  std::vector<std::string> group_by;

  // Wire form: {"template": name, "args": {...}}.
  nlohmann::json to_json() const;
  bool operator==(const FunctionCall&) const = default;
};

// Throws Error(MalformedCall).
FunctionCall parse_function_call(const nlohmann::json& wire);
// Parses the first JSON object found in a model reply.
FunctionCall parse_function_reply(std::string_view reply);

std::string build_function_prompt(std::string_view question, const DatabaseCatalog& catalog,
                                  const SchemaLinks* links = nullptr,
                                  const PromptLibrary& prompts = PromptLibrary::builtin());

FunctionCall select_and_fill(std::string_view question, const DatabaseCatalog& catalog,
                             Model& model, const SchemaLinks* links = nullptr,
                             const PromptLibrary& prompts = PromptLibrary::builtin());

enum class IssueKind { UnknownTable, UnknownColumn, InvalidExpression, InvalidArgument };

std::string_view to_string(IssueKind kind);

struct CallIssue {
  IssueKind kind;
  std::string offender;
  std::string detail;
};

struct CallValidation {
  std::vector<CallIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string describe() const;
};

// Bare identifiers are resolved against the catalog. Free-text conditions and
// expressions are checked by running the compiled statement with LIMIT 0 when
// `db` is given.
CallValidation validate_call(const FunctionCall& call, const DatabaseCatalog& catalog,
                             const Database* db = nullptr);

struct CompiledSql {
  std::string sql_text;
  FunctionCall source_call;
};

CompiledSql compile(const FunctionCall& call);

}  // namespace nl2sql
