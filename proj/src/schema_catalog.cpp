#include "nl2sql/schema_catalog.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nl2sql/sql_lexer.hpp"

namespace nl2sql {

using json = nlohmann::json;

const ColumnDescriptor* TableDescriptor::find_column(std::string_view column) const {
  for (const auto& c : columns) {
    if (iequals(c.name, column)) return &c;
  }
  return nullptr;
}

DatabaseCatalog::DatabaseCatalog(std::string db_id, std::vector<TableDescriptor> tables,
                                 std::filesystem::path source_path)
    : db_id_(std::move(db_id)), tables_(std::move(tables)), source_path_(std::move(source_path)) {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    if (tables_[i].name.empty()) throw Error(ErrorCode::Config, "table with empty name");
    for (std::size_t j = 0; j < i; ++j) {
      if (iequals(tables_[i].name, tables_[j].name)) {
        throw Error(ErrorCode::Config, "duplicate table name: " + tables_[i].name);
      }
    }
    const auto& cols = tables_[i].columns;
    for (std::size_t a = 0; a < cols.size(); ++a) {
      if (cols[a].name.empty()) {
        throw Error(ErrorCode::Config, "column with empty name in " + tables_[i].name);
      }
      for (std::size_t b = 0; b < a; ++b) {
        if (iequals(cols[a].name, cols[b].name)) {
          throw Error(ErrorCode::Config,
                      "duplicate column " + cols[a].name + " in " + tables_[i].name);
        }
      }
    }
  }
}

const TableDescriptor* DatabaseCatalog::find_table(std::string_view table) const {
  for (const auto& t : tables_) {
    if (iequals(t.name, table)) return &t;
  }
  return nullptr;
}

std::optional<ColumnRef> DatabaseCatalog::resolve(std::string_view table,
                                                  std::string_view column) const {
  const auto* t = find_table(table);
  if (t == nullptr) return std::nullopt;
  const auto* c = t->find_column(column);
  if (c == nullptr) return std::nullopt;
  return ColumnRef{t->name, c->name};
}

std::size_t DatabaseCatalog::column_count() const {
  std::size_t n = 0;
  for (const auto& t : tables_) n += t.columns.size();
  return n;
}

namespace {

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

std::size_t line_of_key(std::string_view text, const std::string& key) {
  const auto pos = text.find(json(key).dump());
  return pos == std::string_view::npos ? 0 : line_of_offset(text, pos);
}

[[noreturn]] void annotation_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::AnnotationParse,
              "annotation line " + std::to_string(line) + ": " + what);
}

// Comments trailing a column definition in the stored CREATE TABLE text:
//   speed REAL, -- average speed
std::map<std::string, std::string> ddl_comments(std::string_view ddl) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(ddl)};
  std::string line;
  while (std::getline(in, line)) {
    const auto dash = line.find("--");
    if (dash == std::string::npos) continue;
    const auto comment = trim(std::string_view(line).substr(dash + 2));
    auto def = trim(std::string_view(line).substr(0, dash));
    if (comment.empty() || def.empty()) continue;
    if (def.front() == '(') def = trim(std::string_view(def).substr(1));
    std::string name;
    try {
      const auto tokens = tokenize_sql(def);
      if (!tokens.empty() && tokens.front().is_identifier()) name = tokens.front().text;
    } catch (const Error&) {
      continue;
    }
    if (!name.empty()) out.emplace(to_lower(name), comment);
  }
  return out;
}

}  // namespace

Annotations parse_annotations(std::string_view text) {
  Annotations out;
  if (trim(text).empty()) return out;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    annotation_error(line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
  if (!doc.is_object()) annotation_error(1, "top level must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    const auto line = line_of_key(text, key);
    if (!value.is_string()) annotation_error(line, "value for \"" + key + "\" is not a string");
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      if (trim(key).empty()) annotation_error(line, "empty key");
      out.table_comments[key] = value.get<std::string>();
      continue;
    }
    const auto table = key.substr(0, dot);
    const auto column = key.substr(dot + 1);
    if (table.empty() || column.empty() || column.find('.') != std::string::npos) {
      annotation_error(line, "key \"" + key + "\" is not of the form table.column");
    }
    out.column_meanings[{table, column}] = value.get<std::string>();
  }
  return out;
}

Annotations load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read annotation file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_annotations(buf.str());
}

std::string truncate_utf8(std::string_view text, std::size_t max_bytes) {
  if (text.size() <= max_bytes) return std::string(text);
  std::size_t cut = max_bytes;
  // Back off continuation bytes so a multi-byte sequence is never split.
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  return std::string(text.substr(0, cut));
}

DatabaseCatalog build_catalog(const Database& db, const Annotations* annotations,
                              const CatalogOptions& options, Warnings* warnings) {
  std::vector<TableDescriptor> tables;
  std::vector<std::pair<std::string, std::string>> table_rows;
  try {
    Statement list(db,
                   "SELECT name, COALESCE(sql, '') FROM sqlite_master "
                   "WHERE type = 'table' AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' "
                   "ORDER BY rowid");
    while (list.step()) {
      table_rows.emplace_back(render_value(list.column(0)), render_value(list.column(1)));
    }

    for (const auto& [table_name, ddl] : table_rows) {
      TableDescriptor table{table_name, std::nullopt, {}};
      const auto comments = ddl_comments(ddl);
      Statement info(db, "PRAGMA table_info(" + quote_identifier(table_name) + ")");
      while (info.step()) {
        ColumnDescriptor col;
        col.name = render_value(info.column(1));
        col.value_type = render_value(info.column(2));
        if (auto it = comments.find(to_lower(col.name)); it != comments.end()) {
          col.meaning = it->second;
        }
        table.columns.push_back(std::move(col));
      }
      for (auto& col : table.columns) {
        if (options.samples_per_column == 0) break;
        Statement sample(db, "SELECT " + quote_identifier(col.name) + " FROM " +
                                 quote_identifier(table_name) + " WHERE " +
                                 quote_identifier(col.name) + " IS NOT NULL LIMIT " +
                                 std::to_string(options.samples_per_column));
        while (sample.step()) {
          col.sample_values.push_back(
              truncate_utf8(render_value(sample.column(0)), options.max_sample_length));
        }
      }
      tables.push_back(std::move(table));
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::UnreadableDatabase,
                "introspection of " + db.path().string() + " failed: " + e.what());
  }

  if (annotations != nullptr) {
    for (const auto& [table_name, comment] : annotations->table_comments) {
      auto it = std::find_if(tables.begin(), tables.end(), [&](const TableDescriptor& t) {
        return iequals(t.name, table_name);
      });
      if (it == tables.end()) {
        warn(warnings, "annotation references unknown table " + table_name);
        continue;
      }
      it->comment = comment;
    }
    for (const auto& [key, meaning] : annotations->column_meanings) {
      auto it = std::find_if(tables.begin(), tables.end(), [&](const TableDescriptor& t) {
        return iequals(t.name, key.first);
      });
      if (it == tables.end()) {
        warn(warnings, "annotation references unknown table " + key.first);
        continue;
      }
      auto col = std::find_if(it->columns.begin(), it->columns.end(),
                              [&](const ColumnDescriptor& c) { return iequals(c.name, key.second); });
      if (col == it->columns.end()) {
        warn(warnings, "annotation references unknown column " + key.first + "." + key.second);
        continue;
      }
      col->meaning = meaning;
    }
  }

  return DatabaseCatalog(db.path().stem().string(), std::move(tables), db.path());
}

std::string render_compact(const DatabaseCatalog& catalog) {
  std::string out;
  for (const auto& table : catalog.tables()) {
    if (!out.empty()) out += ' ';
    out += "Table " + table.name + ", Columns=[";
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      if (i > 0) out += ", ";
      out += table.columns[i].name;
    }
    out += "];";
  }
  return out;
}

std::string render_enriched(const DatabaseCatalog& catalog, const SchemaLinks* links,
                            const EnrichedOptions& options) {
  std::vector<const TableDescriptor*> included;
  if (links == nullptr) {
    for (const auto& t : catalog.tables()) included.push_back(&t);
  } else {
    for (const auto& ref : links->links()) {
      if (!catalog.resolve(ref.table, ref.column)) {
        throw Error(ErrorCode::UnresolvedLink,
                    "link " + ref.table + "." + ref.column + " does not resolve in catalog");
      }
    }
    const auto linked = links->tables();
    for (const auto& t : catalog.tables()) {
      const bool hit = std::any_of(linked.begin(), linked.end(),
                                   [&](const std::string& name) { return iequals(name, t.name); });
      if (hit) included.push_back(&t);
    }
  }

  std::string out;
  for (const auto* table : included) {
    if (!out.empty()) out += '\n';
    const auto label = options.table_labels.find(table->name);
    out += label != options.table_labels.end() ? label->second : "Table " + table->name;
    if (table->comment && !table->comment->empty()) out += " -- " + *table->comment;
    out += '\n';
    for (const auto& col : table->columns) {
      std::string samples;
      for (std::size_t i = 0; i < col.sample_values.size(); ++i) {
        if (i > 0) samples += ", ";
        samples += col.sample_values[i];
      }
      out += "  - " + col.name + " (ValueType: " + col.value_type + "; Meaning: " + col.meaning +
             "; Sampling: " + samples + ")\n";
    }
  }
  return out;
}

}  // namespace nl2sql
