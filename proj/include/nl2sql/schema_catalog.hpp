#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nl2sql/database.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/schema_links.hpp"

namespace nl2sql {

struct ColumnDescriptor {
  std::string name;
  std::string value_type;
  std::string meaning;
  std::vector<std::string> sample_values;
};

struct TableDescriptor {
  std::string name;
  std::optional<std::string> comment;
  std::vector<ColumnDescriptor> columns;

  const ColumnDescriptor* find_column(std::string_view column) const;
};

// Immutable snapshot of a database's base tables. Name lookups ignore case;
// rendering keeps the original casing.
class DatabaseCatalog {
 public:
  DatabaseCatalog(std::string db_id, std::vector<TableDescriptor> tables,
                  std::filesystem::path source_path);

  const std::string& db_id() const { return db_id_; }
  const std::vector<TableDescriptor>& tables() const { return tables_; }
  const std::filesystem::path& source_path() const { return source_path_; }

  const TableDescriptor* find_table(std::string_view table) const;
  // Canonical (catalog-cased) reference, or nullopt when unresolvable.
  std::optional<ColumnRef> resolve(std::string_view table, std::string_view column) const;
  std::size_t column_count() const;

 private:
  std::string db_id_;
  std::vector<TableDescriptor> tables_;
  std::filesystem::path source_path_;
};

// Sidecar meanings. Keys keep the casing found in the file.
struct Annotations {
  std::map<std::string, std::string> table_comments;
  std::map<std::pair<std::string, std::string>, std::string> column_meanings;

  std::size_t size() const { return column_meanings.size(); }
};

struct CatalogOptions {
  std::size_t samples_per_column = 1;
  std::size_t max_sample_length = 64;
};

// Reads a JSON object {"table.column": "meaning", "table": "comment"}.
// Throws Error(AnnotationParse) naming the offending line.
Annotations load_annotations(const std::filesystem::path& path);
Annotations parse_annotations(std::string_view text);

// Annotation keys that match nothing are reported through `warnings`.
DatabaseCatalog build_catalog(const Database& db, const Annotations* annotations = nullptr,
                              const CatalogOptions& options = {},
                              Warnings* warnings = nullptr);

// "Table t, Columns=[a, b]; Table u, Columns=[c];"
std::string render_compact(const DatabaseCatalog& catalog);

struct EnrichedOptions {
  // Replaces the "Table <name>" heading, keyed by catalog table name.
  std::map<std::string, std::string> table_labels;
};

// Per-column lines with value type, meaning and sample. With links, only the
// linked tables are rendered. Throws Error(UnresolvedLink).
std::string render_enriched(const DatabaseCatalog& catalog,
                            const SchemaLinks* links = nullptr,
                            const EnrichedOptions& options = {});

// Cuts at most `max_bytes` without splitting a UTF-8 sequence.
std::string truncate_utf8(std::string_view text, std::size_t max_bytes);

}  // namespace nl2sql
