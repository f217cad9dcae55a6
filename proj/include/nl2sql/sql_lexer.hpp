#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace nl2sql {

enum class TokenKind { Word, QuotedIdentifier, String, Number, Punct, Semicolon };

struct Token {
  TokenKind kind;
  std::string text;  // unquoted value for QuotedIdentifier and String
  std::size_t offset = 0;
  std::size_t end = 0;  // one past the last source byte
  int depth = 0;  // parenthesis depth at the token

  bool is_keyword(std::string_view keyword) const;
  // Word or quoted identifier.
  bool is_identifier() const {
    return kind == TokenKind::Word || kind == TokenKind::QuotedIdentifier;
  }
};

// Lexes SQLite-flavoured SQL, skipping comments. Throws Error(UnparseableSql)
// on unterminated literals/comments or unbalanced parentheses.
std::vector<Token> tokenize_sql(std::string_view sql);

// Statements separated by top-level semicolons, trimmed, empties dropped.
std::vector<std::string> split_statements(std::string_view sql);

bool has_top_level_order_by(std::string_view sql);

bool iequals(std::string_view a, std::string_view b);
std::string to_lower(std::string_view s);
std::string to_upper(std::string_view s);
std::string trim(std::string_view s);

}  // namespace nl2sql
