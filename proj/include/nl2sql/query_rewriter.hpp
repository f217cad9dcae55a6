#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nl2sql/errors.hpp"
#include "nl2sql/llm_gateway.hpp"
#include "nl2sql/prompts.hpp"

namespace nl2sql {

enum class TermCategory { temporal, spatial, domain };

std::string_view to_string(TermCategory category);
// Unknown labels fall back to domain.
TermCategory category_from_string(std::string_view text);

// Wall-clock instant; no time zone is attached.
using Timestamp = std::chrono::sys_seconds;

// "YYYY-MM-DD HH:MM". Throws Error(MissingContext) outside years 0000-9999.
std::string format_timestamp(Timestamp ts);
// Accepts "YYYY-MM-DD HH:MM[:SS]" with ' ' or 'T'. Throws Error(Config).
Timestamp parse_timestamp(std::string_view text);

struct RewriteContext {
  Timestamp current_timestamp;
  std::optional<std::string> location;
  std::map<std::string, std::string> glossary;
};

// Reads a JSON object {term: definition}.
std::map<std::string, std::string> load_glossary(const std::filesystem::path& path);

struct VagueTerm {
  std::string surface;
  TermCategory category = TermCategory::domain;

  bool operator==(const VagueTerm&) const = default;
};

using TermMapping = std::map<std::string, std::string>;

struct RewriteResult {
  std::string original;
  std::vector<VagueTerm> terms;
  TermMapping mapping;
  std::string rewritten;
  Warnings warnings;

  bool is_identity() const { return terms.empty() && rewritten == original; }
};

enum class ReplaceMode { local, llm };

struct RewriteOptions {
  std::chrono::minutes recent_window{15};
  ReplaceMode replace_mode = ReplaceMode::local;
  const PromptLibrary* prompts = nullptr;  // builtin when null
};

// True when `term` occurs in `text` with word boundaries at both ends.
bool contains_token(std::string_view text, std::string_view term);

// Terms the model names that are not present verbatim are dropped with a
// warning; an unparseable reply yields no terms.
std::vector<VagueTerm> extract_vague_terms(std::string_view question, const RewriteContext& ctx,
                                           Model& model, const RewriteOptions& options = {},
                                           Warnings* warnings = nullptr);

// Glossary entries win, then the built-in temporal policy, then the model.
TermMapping transform_terms(const std::vector<VagueTerm>& terms, std::string_view question,
                            const RewriteContext& ctx, Model& model,
                            const RewriteOptions& options = {});

// Deterministic substitution, longest key first. Throws Error(KeyAbsent).
std::string replace_terms(std::string_view question, const TermMapping& mapping);

RewriteResult rewrite(std::string_view question, const RewriteContext& ctx, Model& model,
                      const RewriteOptions& options = {});

}  // namespace nl2sql
