#pragma once

#include <string>
#include <string_view>

#include "nl2sql/errors.hpp"
#include "nl2sql/llm_gateway.hpp"
#include "nl2sql/prompts.hpp"
#include "nl2sql/schema_catalog.hpp"
#include "nl2sql/schema_links.hpp"

namespace nl2sql {

struct ExplainResponse {
  std::string text;
};

std::string build_explain_prompt(std::string_view question, std::string_view compact_schema,
                                 const PromptLibrary& prompts = PromptLibrary::builtin());
std::string build_squeeze_prompt(std::string_view explanation,
                                 const PromptLibrary& prompts = PromptLibrary::builtin());

// Explain phase: free-form reasoning over the compact schema.
// Throws Error(PreconditionViolated) for an empty schema, before any call.
ExplainResponse explain(std::string_view question, std::string_view compact_schema, Model& model,
                        const PromptLibrary& prompts = PromptLibrary::builtin());

// Squeeze phase: only the explanation is sent, never the question.
std::string squeeze(std::string_view explain_text, Model& model,
                    const PromptLibrary& prompts = PromptLibrary::builtin());

enum class ParseMode { lenient, strict };

// Reads the first bracketed list of table.column entries. Lenient mode skips
// entries that do not contain exactly one dot; strict mode rejects them and
// any text around the list. Throws Error(NoListFound).
SchemaLinks parse_links(std::string_view squeezed, ParseMode mode = ParseMode::lenient,
                        Warnings* warnings = nullptr);

// Canonicalizes against the catalog and drops anything unresolvable.
SchemaLinks validate_links(const SchemaLinks& links, const DatabaseCatalog& catalog,
                           Warnings* warnings = nullptr);

struct LinkResult {
  ExplainResponse explanation;
  std::string squeezed;
  SchemaLinks links;  // validated
  bool fell_back_to_all_tables = false;
  Warnings warnings;
};

// explain -> squeeze -> parse -> validate. An empty or unparseable result
// leaves `links` empty and sets fell_back_to_all_tables.
LinkResult link_schema(std::string_view question, const DatabaseCatalog& catalog, Model& model,
                       const PromptLibrary& prompts = PromptLibrary::builtin());

}  // namespace nl2sql
