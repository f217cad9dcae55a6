#include "nl2sql/sql_generator.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "nl2sql/errors.hpp"
#include "nl2sql/sql_lexer.hpp"

namespace nl2sql {

std::string_view to_string(CandidateOrigin origin) {
  return origin == CandidateOrigin::initial ? "initial" : "boosted";
}

std::string GenerationPrompt::render(const PromptLibrary& prompts) const {
  if (trim(instruction).empty() || trim(schema_block).empty() || trim(question).empty()) {
    throw Error(ErrorCode::PreconditionViolated,
                "generation prompt needs instruction, schema and question");
  }
  const auto& tmpl = prompts.get("generate");
  const auto i = tmpl.find("{instruction}");
  const auto s = tmpl.find("{schema_block}");
  const auto q = tmpl.find("{question}");
  if (i == std::string::npos || s == std::string::npos || q == std::string::npos || !(i < s && s < q)) {
    throw Error(ErrorCode::Config,
                "generate template must place {instruction}, {schema_block}, {question} in order");
  }
  return fill_template(tmpl, {{"instruction", trim(instruction)},
                              {"schema_block", schema_block},
                              {"question", question}});
}

GenerationPrompt build_generation_prompt(std::string_view question, const DatabaseCatalog& catalog,
                                         const SchemaLinks* links, const PromptLibrary& prompts) {
  const SchemaLinks* effective = links != nullptr && !links->empty() ? links : nullptr;
  return {trim(prompts.get("generate_sql_instruction")), render_enriched(catalog, effective),
          std::string(question)};
}

SqlCandidate generate_sql(const GenerationPrompt& prompt, Model& model,
                          const PromptLibrary& prompts) {
  const auto reply = model.ask(prompt.render(prompts));
  return {extract_sql(reply.text), 0, CandidateOrigin::initial};
}

namespace {

struct Fence {
  std::string body;
};

std::optional<Fence> first_fence(std::string_view reply) {
  const auto open = reply.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body_start = reply.find('\n', open + 3);
  if (body_start == std::string_view::npos) {
    // Single-line fence: ```SELECT 1```
    body_start = open + 3;
  } else {
    const auto tag = trim(reply.substr(open + 3, body_start - open - 3));
    const bool tag_is_language =
        tag.empty() || std::all_of(tag.begin(), tag.end(), [](char c) {
          return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '_';
        });
    body_start = tag_is_language && tag.find(' ') == std::string::npos &&
                         !iequals(tag, "select") && !iequals(tag, "with")
                     ? body_start + 1
                     : open + 3;
  }
  auto close = reply.find("```", body_start);
  if (close == std::string_view::npos) close = reply.size();
  return Fence{trim(reply.substr(body_start, close - body_start))};
}

bool word_at(std::string_view text, std::size_t pos, std::string_view word, bool exact_case) {
  if (pos + word.size() > text.size()) return false;
  const auto piece = text.substr(pos, word.size());
  if (exact_case ? piece != word : !iequals(piece, word)) return false;
  const auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  if (pos > 0 && is_word(text[pos - 1])) return false;
  const auto end = pos + word.size();
  return end >= text.size() || !is_word(text[end]);
}

// "WITH name AS (" or "WITH RECURSIVE"; guards against prose such as "with a query".
bool looks_like_cte(std::string_view text, std::size_t pos) {
  try {
    const auto tokens = tokenize_sql(text.substr(pos, 200));
    return tokens.size() >= 2 &&
           (tokens[1].is_keyword("RECURSIVE") ||
            (tokens.size() >= 4 && tokens[1].is_identifier() && tokens[2].is_keyword("AS") &&
             tokens[3].text == "("));
  } catch (const Error&) {
    return false;
  }
}

std::optional<std::size_t> find_statement_start(std::string_view reply) {
  for (const bool exact : {true, false}) {
    for (std::size_t pos = 0; pos < reply.size(); ++pos) {
      if (word_at(reply, pos, "SELECT", exact)) return pos;
      if (word_at(reply, pos, "WITH", exact) && looks_like_cte(reply, pos)) return pos;
    }
  }
  return std::nullopt;
}

std::string strip_fence_lines(std::string text) {
  for (auto pos = text.find("```"); pos != std::string::npos; pos = text.find("```")) {
    text.erase(pos, 3);
  }
  return trim(text);
}

}  // namespace

std::string first_statement(std::string_view sql) {
  char quote = 0;
  for (std::size_t i = 0; i < sql.size(); ++i) {
    const char c = sql[i];
    if (quote != 0) {
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"' || c == '`') {
      quote = c;
    } else if (c == '[') {
      quote = ']';
    } else if (c == '-' && i + 1 < sql.size() && sql[i + 1] == '-') {
      const auto nl = sql.find('\n', i);
      if (nl == std::string_view::npos) return trim(sql.substr(0, i));
      i = nl;
    } else if (c == ';') {
      return trim(sql.substr(0, i));
    }
  }
  if (quote != 0) {
    // Unbalanced quote: fall back to a plain cut.
    return trim(sql.substr(0, sql.find(';')));
  }
  return trim(sql);
}

std::string extract_sql(std::string_view reply) {
  if (auto fence = first_fence(reply)) {
    auto sql = strip_fence_lines(first_statement(fence->body));
    if (!sql.empty()) return sql;
  }
  const auto start = find_statement_start(reply);
  if (!start) throw Error(ErrorCode::NoSqlFound, "reply contains no SQL statement");
  auto rest = reply.substr(*start);
  // Prose after the statement is separated by a blank line.
  if (const auto blank = rest.find("\n\n"); blank != std::string_view::npos) {
    rest = rest.substr(0, blank);
  }
  auto sql = strip_fence_lines(first_statement(rest));
  if (sql.empty()) throw Error(ErrorCode::NoSqlFound, "reply contains no SQL statement");
  return sql;
}

std::string extract_code(std::string_view reply) {
  std::string code;
  if (auto fence = first_fence(reply)) {
    code = fence->body;
  } else {
    code = trim(reply);
  }
  if (code.empty()) throw Error(ErrorCode::NoSqlFound, "reply contains no code");
  return code;
}

}  // namespace nl2sql
