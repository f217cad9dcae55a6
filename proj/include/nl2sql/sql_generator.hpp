#pragma once

#include <string>
#include <string_view>

#include "nl2sql/llm_gateway.hpp"
#include "nl2sql/prompts.hpp"
#include "nl2sql/schema_catalog.hpp"
#include "nl2sql/schema_links.hpp"

namespace nl2sql {

struct GenerationPrompt {
  std::string instruction;
  std::string schema_block;
  std::string question;

  // Assembles instruction, schema and question in that order via the
  // "generate" template. Throws Error(PreconditionViolated) on an empty part.
  std::string render(const PromptLibrary& prompts = PromptLibrary::builtin()) const;
};

enum class CandidateOrigin { initial, boosted };

std::string_view to_string(CandidateOrigin origin);

struct SqlCandidate {
  std::string sql_text;
  int attempt_index = 0;
  CandidateOrigin origin = CandidateOrigin::initial;
};

// Empty or null links mean every table is described.
GenerationPrompt build_generation_prompt(std::string_view question, const DatabaseCatalog& catalog,
                                         const SchemaLinks* links,
                                         const PromptLibrary& prompts = PromptLibrary::builtin());

SqlCandidate generate_sql(const GenerationPrompt& prompt, Model& model,
                          const PromptLibrary& prompts = PromptLibrary::builtin());

// First fenced block, else the first statement starting at SELECT/WITH.
// The result is a single statement without its terminator.
// Throws Error(NoSqlFound).
std::string extract_sql(std::string_view reply);

// Body of the first fenced block, or the whole reply when there is none.
// Throws Error(NoSqlFound) when the result is blank.
std::string extract_code(std::string_view reply);

// Text up to the first semicolon outside quotes, trimmed.
std::string first_statement(std::string_view sql);

}  // namespace nl2sql
