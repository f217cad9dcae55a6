#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace nl2sql {

// A field is quoted when it holds a comma, quote, CR or LF, or is empty
// (an unquoted empty field means NULL).
std::string csv_field(std::string_view field);
std::string csv_null_field();

void write_csv_row(std::ostream& out, const std::vector<std::optional<std::string>>& fields);

struct CsvTable {
  std::vector<std::string> header;
  // nullopt for unquoted empty fields.
  std::vector<std::vector<std::optional<std::string>>> rows;
};

// Header row mandatory; accepts LF or CRLF. Throws Error(Io) on unterminated
// quotes or ragged rows.
CsvTable parse_csv(std::string_view text);

}  // namespace nl2sql
