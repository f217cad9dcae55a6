#include "nl2sql/sql_lexer.hpp"

#include <algorithm>
#include <cctype>

#include "nl2sql/errors.hpp"

namespace nl2sql {

namespace {

bool is_word_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool is_word_char(char c) {
  return is_word_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '$';
}

[[noreturn]] void fail(std::string_view what, std::size_t offset) {
  throw Error(ErrorCode::UnparseableSql,
              std::string(what) + " at offset " + std::to_string(offset));
}

// Reads a literal delimited by `close`, where a doubled close char escapes it.
std::size_t read_delimited(std::string_view sql, std::size_t pos, char close,
                           std::string& out) {
  const std::size_t start = pos;
  ++pos;
  while (pos < sql.size()) {
    if (sql[pos] == close) {
      if (close != ']' && pos + 1 < sql.size() && sql[pos + 1] == close) {
        out.push_back(close);
        pos += 2;
        continue;
      }
      return pos + 1;
    }
    out.push_back(sql[pos++]);
  }
  fail("unterminated literal", start);
}

}  // namespace

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n\f\v";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return std::string(s.substr(first, last - first + 1));
}

bool Token::is_keyword(std::string_view keyword) const {
  return kind == TokenKind::Word && iequals(text, keyword);
}

std::vector<Token> tokenize_sql(std::string_view sql) {
  std::vector<Token> tokens;
  int depth = 0;
  std::size_t pos = 0;
  while (pos < sql.size()) {
    const char c = sql[pos];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
      continue;
    }
    if (c == '-' && pos + 1 < sql.size() && sql[pos + 1] == '-') {
      pos = sql.find('\n', pos);
      if (pos == std::string_view::npos) break;
      continue;
    }
    if (c == '/' && pos + 1 < sql.size() && sql[pos + 1] == '*') {
      const auto end = sql.find("*/", pos + 2);
      if (end == std::string_view::npos) fail("unterminated comment", pos);
      pos = end + 2;
      continue;
    }

    Token tok{TokenKind::Punct, {}, pos, pos, depth};
    if (c == '\'') {
      tok.kind = TokenKind::String;
      pos = read_delimited(sql, pos, '\'', tok.text);
    } else if (c == '"' || c == '`' || c == '[') {
      tok.kind = TokenKind::QuotedIdentifier;
      pos = read_delimited(sql, pos, c == '[' ? ']' : c, tok.text);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && pos + 1 < sql.size() &&
                std::isdigit(static_cast<unsigned char>(sql[pos + 1])))) {
      tok.kind = TokenKind::Number;
      const std::size_t start = pos;
      while (pos < sql.size() &&
             (std::isalnum(static_cast<unsigned char>(sql[pos])) || sql[pos] == '.' ||
              ((sql[pos] == '+' || sql[pos] == '-') &&
               (sql[pos - 1] == 'e' || sql[pos - 1] == 'E')))) {
        ++pos;
      }
      tok.text = std::string(sql.substr(start, pos - start));
    } else if (is_word_start(c)) {
      tok.kind = TokenKind::Word;
      const std::size_t start = pos;
      while (pos < sql.size() && is_word_char(sql[pos])) ++pos;
      tok.text = std::string(sql.substr(start, pos - start));
    } else if (c == ';') {
      tok.kind = TokenKind::Semicolon;
      tok.text = ";";
      ++pos;
    } else {
      if (c == '(') {
        ++depth;
      } else if (c == ')') {
        if (depth == 0) fail("unbalanced ')'", pos);
        --depth;
        tok.depth = depth;
      }
      tok.text = std::string(1, c);
      ++pos;
    }
    tok.end = pos;
    tokens.push_back(std::move(tok));
  }
  if (depth != 0) fail("unbalanced '('", sql.size());
  return tokens;
}

std::vector<std::string> split_statements(std::string_view sql) {
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t end = 0;
  bool has_tokens = false;
  for (const auto& tok : tokenize_sql(sql)) {
    if (tok.kind == TokenKind::Semicolon && tok.depth == 0) {
      if (has_tokens) out.push_back(trim(sql.substr(start, end - start)));
      start = tok.offset + 1;
      has_tokens = false;
      continue;
    }
    if (!has_tokens) start = tok.offset;
    has_tokens = true;
    end = tok.end;
  }
  if (has_tokens) out.push_back(trim(sql.substr(start, end - start)));
  return out;
}

bool has_top_level_order_by(std::string_view sql) {
  const auto tokens = tokenize_sql(sql);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i].depth == 0 && tokens[i].is_keyword("ORDER") &&
        tokens[i + 1].is_keyword("BY")) {
      return true;
    }
  }
  return false;
}

}  // namespace nl2sql
