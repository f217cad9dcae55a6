#include "nl2sql/text2function.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "nl2sql/errors.hpp"
#include "nl2sql/sql_executor.hpp"
#include "nl2sql/sql_lexer.hpp"

namespace nl2sql {

using json = nlohmann::json;

std::string_view to_string(FunctionTemplate t) {
  switch (t) {
    case FunctionTemplate::get_specific_columns: return "get_specific_columns";
    case FunctionTemplate::get_sorted_values_based_on_condition:
      return "get_sorted_values_based_on_condition";
    case FunctionTemplate::get_aggregated_value: return "get_aggregated_value";
    case FunctionTemplate::get_distinct_grouped: return "get_distinct_grouped";
  }
  return "";
}

std::optional<FunctionTemplate> function_template_from_string(std::string_view name) {
  for (auto t : kAllFunctionTemplates) {
    if (to_string(t) == trim(name)) return t;
  }
  return std::nullopt;
}

std::string_view signature(FunctionTemplate t) {
  switch (t) {
    case FunctionTemplate::get_specific_columns:
      return "get_specific_columns(columns, table, condition)";
    case FunctionTemplate::get_sorted_values_based_on_condition:
      return "get_sorted_values_based_on_condition(values, table, condition, order_by, limit)";
    case FunctionTemplate::get_aggregated_value:
      return "get_aggregated_value(calculation, table, condition)";
    case FunctionTemplate::get_distinct_grouped:
      return "get_distinct_grouped(columns, table, condition, group_by)";
  }
  return "";
}

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::UnknownTable: return "UnknownTable";
    case IssueKind::UnknownColumn: return "UnknownColumn";
    case IssueKind::InvalidExpression: return "InvalidExpression";
    case IssueKind::InvalidArgument: return "InvalidArgument";
  }
  return "";
}

namespace {

struct ArgSpec {
  std::set<std::string> required;
  std::set<std::string> optional;
};

ArgSpec arg_spec(FunctionTemplate t) {
  switch (t) {
    case FunctionTemplate::get_specific_columns:
      return {{"columns", "table"}, {"condition"}};
    case FunctionTemplate::get_sorted_values_based_on_condition:
      return {{"values", "table", "order_by"}, {"condition", "limit"}};
    case FunctionTemplate::get_aggregated_value:
      return {{"calculation", "table"}, {"condition"}};
    case FunctionTemplate::get_distinct_grouped:
      return {{"columns", "table"}, {"condition", "group_by"}};
  }
  return {};
}

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedCall, what);
}

std::vector<std::string> string_list(const json& v, const std::string& name) {
  std::vector<std::string> out;
  if (v.is_string()) {
    out.push_back(trim(v.get<std::string>()));
  } else if (v.is_array()) {
    for (const auto& item : v) {
      if (!item.is_string()) malformed("argument " + name + " must hold strings");
      out.push_back(trim(item.get<std::string>()));
    }
  } else {
    malformed("argument " + name + " must be a string or a list of strings");
  }
  out.erase(std::remove(out.begin(), out.end(), std::string()), out.end());
  if (out.empty()) malformed("argument " + name + " is empty");
  return out;
}

std::string text_arg(const json& v, const std::string& name) {
  if (!v.is_string()) malformed("argument " + name + " must be a string");
  auto s = trim(v.get<std::string>());
  if (s.empty()) malformed("argument " + name + " is empty");
  return s;
}

json list_json(const std::vector<std::string>& items) { return json(items); }

}  // namespace

json FunctionCall::to_json() const {
  json args = json::object();
  args["table"] = table;
  switch (function) {
    case FunctionTemplate::get_specific_columns:
      args["columns"] = list_json(columns);
      break;
    case FunctionTemplate::get_sorted_values_based_on_condition:
      args["values"] = list_json(values);
      if (order_by) args["order_by"] = *order_by;
      if (limit) args["limit"] = *limit;
      break;
    case FunctionTemplate::get_aggregated_value:
      args["calculation"] = calculation;
      break;
    case FunctionTemplate::get_distinct_grouped:
      args["columns"] = list_json(columns);
      if (!group_by.empty()) args["group_by"] = list_json(group_by);
      break;
  }
  if (condition) args["condition"] = *condition;
  return {{"template", std::string(to_string(function))}, {"args", std::move(args)}};
}

FunctionCall parse_function_call(const json& wire) {
  if (!wire.is_object()) malformed("function call must be a JSON object");
  if (!wire.contains("template") || !wire["template"].is_string()) {
    malformed("function call lacks a template name");
  }
  const auto name = wire["template"].get<std::string>();
  const auto function = function_template_from_string(name);
  if (!function) malformed("unknown function template: " + name);
  if (!wire.contains("args") || !wire["args"].is_object()) malformed("function call lacks args");

  const auto spec = arg_spec(*function);
  FunctionCall call;
  call.function = *function;
  for (const auto& [key, value] : wire["args"].items()) {
    if (!spec.required.count(key) && !spec.optional.count(key)) {
      malformed(std::string(to_string(*function)) + " takes no argument " + key);
    }
    if (value.is_null()) {
      if (spec.required.count(key)) malformed("required argument " + key + " is null");
      continue;
    }
    if (key == "columns") {
      call.columns = string_list(value, key);
    } else if (key == "values") {
      call.values = string_list(value, key);
    } else if (key == "group_by") {
      call.group_by = string_list(value, key);
    } else if (key == "calculation") {
      call.calculation = text_arg(value, key);
    } else if (key == "table") {
      call.table = text_arg(value, key);
    } else if (key == "condition") {
      auto c = value.is_string() ? trim(value.get<std::string>()) : text_arg(value, key);
      if (!c.empty()) call.condition = std::move(c);
    } else if (key == "order_by") {
      call.order_by = value.is_array() ? [&] {
        std::string joined;
        for (const auto& item : string_list(value, key)) {
          if (!joined.empty()) joined += ", ";
          joined += item;
        }
        return joined;
      }()
                                         : text_arg(value, key);
    } else if (key == "limit") {
      std::int64_t limit = 0;
      if (value.is_number_integer()) {
        limit = value.get<std::int64_t>();
      } else if (value.is_string()) {
        try {
          limit = std::stoll(value.get<std::string>());
        } catch (const std::exception&) {
          malformed("limit must be a positive integer");
        }
      } else {
        malformed("limit must be a positive integer");
      }
      if (limit <= 0) malformed("limit must be a positive integer");
      call.limit = limit;
    }
  }
  for (const auto& key : spec.required) {
    if (!wire["args"].contains(key)) {
      malformed(std::string(to_string(*function)) + " requires argument " + key);
    }
  }
  return call;
}

FunctionCall parse_function_reply(std::string_view reply) {
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    malformed("reply contains no JSON object");
  }
  json wire;
  try {
    wire = json::parse(reply.substr(open, close - open + 1));
  } catch (const json::exception& e) {
    malformed(std::string("reply is not valid JSON: ") + e.what());
  }
  return parse_function_call(wire);
}

std::string build_function_prompt(std::string_view question, const DatabaseCatalog& catalog,
                                  const SchemaLinks* links, const PromptLibrary& prompts) {
  const SchemaLinks* effective = links != nullptr && !links->empty() ? links : nullptr;
  return prompts.render("function_select", {{"schema_block", render_enriched(catalog, effective)},
                                            {"question", std::string(question)}});
}

FunctionCall select_and_fill(std::string_view question, const DatabaseCatalog& catalog,
                             Model& model, const SchemaLinks* links,
                             const PromptLibrary& prompts) {
  const auto reply = model.ask(build_function_prompt(question, catalog, links, prompts));
  return parse_function_reply(reply.text);
}

namespace {

std::optional<std::string> bare_identifier(std::string_view item) {
  auto s = trim(item);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '`') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) {
    return std::nullopt;
  }
  const bool ok = std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
  return ok ? std::optional<std::string>(s) : std::nullopt;
}

// "speed DESC, name" -> {"speed", "name"}; expressions are returned verbatim.
std::vector<std::string> ordering_terms(std::string_view order_by) {
  std::vector<std::string> out;
  std::vector<Token> tokens;
  try {
    tokens = tokenize_sql(order_by);
  } catch (const Error&) {
    return {std::string(order_by)};
  }
  std::size_t start = 0;
  const auto flush = [&](std::size_t end) {
    std::size_t stop = end;
    while (stop > start) {
      const auto& t = tokens[stop - 1];
      if (t.is_keyword("ASC") || t.is_keyword("DESC") || t.is_keyword("NULLS") ||
          t.is_keyword("FIRST") || t.is_keyword("LAST")) {
        --stop;
      } else {
        break;
      }
    }
    if (stop > start) {
      out.push_back(std::string(
          order_by.substr(tokens[start].offset, tokens[stop - 1].end - tokens[start].offset)));
    }
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].depth == 0 && tokens[i].text == ",") {
      flush(i);
      start = i + 1;
    }
  }
  flush(tokens.size());
  return out;
}

}  // namespace

std::string CallValidation::describe() const {
  std::string out;
  for (const auto& issue : issues) {
    if (!out.empty()) out += "; ";
    out += std::string(to_string(issue.kind)) + "(" + issue.offender + ")";
    if (!issue.detail.empty()) out += ": " + issue.detail;
  }
  return out;
}

CallValidation validate_call(const FunctionCall& call, const DatabaseCatalog& catalog,
                             const Database* db) {
  CallValidation result;
  const auto add = [&](IssueKind kind, std::string offender, std::string detail = {}) {
    result.issues.push_back({kind, std::move(offender), std::move(detail)});
  };

  const auto* table = catalog.find_table(call.table);
  if (call.table.empty()) {
    add(IssueKind::InvalidArgument, "table", "table is empty");
  } else if (table == nullptr) {
    add(IssueKind::UnknownTable, call.table);
  }

  std::vector<std::string> items;
  switch (call.function) {
    case FunctionTemplate::get_specific_columns:
    case FunctionTemplate::get_distinct_grouped:
      if (call.columns.empty()) add(IssueKind::InvalidArgument, "columns", "no columns given");
      items = call.columns;
      items.insert(items.end(), call.group_by.begin(), call.group_by.end());
      break;
    case FunctionTemplate::get_sorted_values_based_on_condition:
      if (call.values.empty()) add(IssueKind::InvalidArgument, "values", "no values given");
      if (!call.order_by || trim(*call.order_by).empty()) {
        add(IssueKind::InvalidArgument, "order_by", "ordering is required");
      }
      items = call.values;
      if (call.order_by) {
        for (auto& term : ordering_terms(*call.order_by)) items.push_back(std::move(term));
      }
      break;
    case FunctionTemplate::get_aggregated_value:
      if (trim(call.calculation).empty()) {
        add(IssueKind::InvalidArgument, "calculation", "calculation is empty");
      }
      break;
  }
  if (call.limit && *call.limit <= 0) add(IssueKind::InvalidArgument, "limit", "must be positive");

  if (table != nullptr) {
    for (const auto& item : items) {
      if (trim(item) == "*") continue;
      if (auto ident = bare_identifier(item); ident && table->find_column(*ident) == nullptr) {
        add(IssueKind::UnknownColumn, *ident, "not a column of " + table->name);
      }
    }
  }
  if (!result.ok()) return result;

  const auto compiled = compile(call);
  try {
    guard_statement(compiled.sql_text);
  } catch (const Error& e) {
    add(IssueKind::InvalidExpression, compiled.sql_text, e.what());
    return result;
  }
  if (db != nullptr) {
    const auto probe = execute_readonly("SELECT * FROM (" + compiled.sql_text + ") LIMIT 0", *db);
    if (!probe.ok()) {
      const auto& msg = *probe.error_message;
      constexpr std::string_view kNoColumn = "no such column: ";
      constexpr std::string_view kNoTable = "no such table: ";
      if (msg.rfind(kNoColumn, 0) == 0) {
        add(IssueKind::UnknownColumn, msg.substr(kNoColumn.size()), msg);
      } else if (msg.rfind(kNoTable, 0) == 0) {
        add(IssueKind::UnknownTable, msg.substr(kNoTable.size()), msg);
      } else {
        add(IssueKind::InvalidExpression, compiled.sql_text, msg);
      }
    }
  }
  return result;
}

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ", ";
    out += item;
  }
  return out;
}

}  // namespace

CompiledSql compile(const FunctionCall& call) {
  std::string sql;
  const std::string where = call.condition ? " WHERE " + *call.condition : "";
  switch (call.function) {
    case FunctionTemplate::get_specific_columns:
      sql = "SELECT " + join(call.columns) + " FROM " + call.table + where;
      break;
    case FunctionTemplate::get_sorted_values_based_on_condition:
      sql = "SELECT " + join(call.values) + " FROM " + call.table + where + " ORDER BY " +
            call.order_by.value_or("");
      if (call.limit) sql += " LIMIT " + std::to_string(*call.limit);
      break;
    case FunctionTemplate::get_aggregated_value:
      sql = "SELECT " + call.calculation + " FROM " + call.table + where;
      break;
    case FunctionTemplate::get_distinct_grouped:
      if (call.group_by.empty()) {
        sql = "SELECT DISTINCT " + join(call.columns) + " FROM " + call.table + where;
      } else {
        sql = "SELECT " + join(call.columns) + " FROM " + call.table + where + " GROUP BY " +
              join(call.group_by);
      }
      break;
  }
  return {std::move(sql), call};
}

}  // namespace nl2sql
