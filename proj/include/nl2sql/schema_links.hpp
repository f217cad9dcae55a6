#pragma once

#include <string>
#include <vector>

namespace nl2sql {

struct ColumnRef {
  std::string table;
  std::string column;

  bool operator==(const ColumnRef&) const = default;
};

// Ordered, duplicate-free table.column references produced by schema linking.
class SchemaLinks {
 public:
  SchemaLinks() = default;
  explicit SchemaLinks(const std::vector<ColumnRef>& refs);

  // Appends unless an equal reference (case-insensitive) is already present.
  bool add(ColumnRef ref);

  const std::vector<ColumnRef>& links() const { return links_; }
  // Unique table names in first-appearance order.
  std::vector<std::string> tables() const;
  bool empty() const { return links_.empty(); }
  std::size_t size() const { return links_.size(); }

  // "[t.a, u.b]"
  std::string format() const;

 private:
  std::vector<ColumnRef> links_;
};

}  // namespace nl2sql
