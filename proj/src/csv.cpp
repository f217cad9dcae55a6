#include "nl2sql/csv.hpp"

#include "nl2sql/errors.hpp"

namespace nl2sql {

std::string csv_field(std::string_view field) {
  if (!field.empty() && field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_null_field() { return {}; }

void write_csv_row(std::ostream& out, const std::vector<std::optional<std::string>>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out << ',';
    out << (fields[i] ? csv_field(*fields[i]) : csv_null_field());
  }
  out << '\n';
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::optional<std::string>>> records;
  std::vector<std::optional<std::string>> record;
  std::string field;
  bool quoted = false;
  bool in_quotes = false;
  bool any = false;  // current record has content

  const auto end_field = [&] {
    if (quoted || !field.empty()) {
      record.emplace_back(std::move(field));
    } else {
      record.emplace_back(std::nullopt);
    }
    field.clear();
    quoted = false;
  };
  const auto end_record = [&] {
    if (any) {
      end_field();
      records.push_back(std::move(record));
    }
    record.clear();
    field.clear();
    quoted = false;
    any = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      quoted = true;
      any = true;
    } else if (c == ',') {
      any = true;
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      end_record();
    } else {
      field += c;
      any = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::Io, "CSV ends inside a quoted field");
  end_record();

  CsvTable table;
  if (records.empty()) throw Error(ErrorCode::Io, "CSV has no header row");
  for (auto& h : records.front()) table.header.push_back(h.value_or(""));
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw Error(ErrorCode::Io, "CSV row " + std::to_string(r + 1) + " has " +
                                     std::to_string(records[r].size()) + " fields, expected " +
                                     std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

}  // namespace nl2sql
