#include "nl2sql/schema_links.hpp"

#include <algorithm>

#include "nl2sql/sql_lexer.hpp"

namespace nl2sql {

SchemaLinks::SchemaLinks(const std::vector<ColumnRef>& refs) {
  for (const auto& ref : refs) add(ref);
}

bool SchemaLinks::add(ColumnRef ref) {
  const bool present = std::any_of(links_.begin(), links_.end(), [&](const ColumnRef& r) {
    return iequals(r.table, ref.table) && iequals(r.column, ref.column);
  });
  if (present) return false;
  links_.push_back(std::move(ref));
  return true;
}

std::vector<std::string> SchemaLinks::tables() const {
  std::vector<std::string> out;
  for (const auto& ref : links_) {
    const bool seen = std::any_of(out.begin(), out.end(),
                                  [&](const std::string& t) { return iequals(t, ref.table); });
    if (!seen) out.push_back(ref.table);
  }
  return out;
}

std::string SchemaLinks::format() const {
  std::string out = "[";
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (i > 0) out += ", ";
    out += links_[i].table + "." + links_[i].column;
  }
  out += "]";
  return out;
}

}  // namespace nl2sql
