#include "nl2sql/schema_linker.hpp"

#include "nl2sql/sql_lexer.hpp"

namespace nl2sql {

std::string build_explain_prompt(std::string_view question, std::string_view compact_schema,
                                 const PromptLibrary& prompts) {
  return prompts.render("link_explain", {{"question", std::string(question)},
                                         {"compact_schema", std::string(compact_schema)}});
}

std::string build_squeeze_prompt(std::string_view explanation, const PromptLibrary& prompts) {
  return prompts.render("link_squeeze", {{"explanation", std::string(explanation)}});
}

ExplainResponse explain(std::string_view question, std::string_view compact_schema, Model& model,
                        const PromptLibrary& prompts) {
  if (trim(compact_schema).empty()) {
    throw Error(ErrorCode::PreconditionViolated, "explain needs a non-empty compact schema");
  }
  auto reply = model.ask(build_explain_prompt(question, compact_schema, prompts));
  if (trim(reply.text).empty()) {
    throw Error(ErrorCode::MalformedLlmOutput, "explain phase returned an empty reply");
  }
  return {std::move(reply.text)};
}

std::string squeeze(std::string_view explain_text, Model& model, const PromptLibrary& prompts) {
  if (trim(explain_text).empty()) {
    throw Error(ErrorCode::PreconditionViolated, "squeeze needs a non-empty explanation");
  }
  return model.ask(build_squeeze_prompt(explain_text, prompts)).text;
}

namespace {

std::string strip_quotes(std::string_view s) {
  auto t = trim(s);
  while (t.size() >= 2 && (t.front() == '"' || t.front() == '\'' || t.front() == '`') &&
         t.back() == t.front() && t.find(t.front(), 1) == t.size() - 1) {
    t = trim(std::string_view(t).substr(1, t.size() - 2));
  }
  return t;
}

}  // namespace

SchemaLinks parse_links(std::string_view squeezed, ParseMode mode, Warnings* warnings) {
  const auto open = squeezed.find('[');
  const auto close = open == std::string_view::npos ? open : squeezed.find(']', open);
  if (open == std::string_view::npos || close == std::string_view::npos) {
    throw Error(ErrorCode::NoListFound, "no bracketed table.column list in reply");
  }
  if (mode == ParseMode::strict) {
    const auto whole = trim(squeezed);
    if (whole.front() != '[' || whole.back() != ']' || whole.find(']') != whole.size() - 1) {
      throw Error(ErrorCode::NoListFound, "strict mode expects the reply to be exactly one list");
    }
  }

  SchemaLinks links;
  const auto body = squeezed.substr(open + 1, close - open - 1);
  std::size_t start = 0;
  while (start <= body.size()) {
    auto comma = body.find(',', start);
    if (comma == std::string_view::npos) comma = body.size();
    const auto entry = strip_quotes(body.substr(start, comma - start));
    start = comma + 1;
    if (entry.empty()) continue;

    const auto dot = entry.find('.');
    const bool one_dot = dot != std::string::npos && entry.find('.', dot + 1) == std::string::npos;
    const auto table = one_dot ? strip_quotes(std::string_view(entry).substr(0, dot)) : "";
    const auto column = one_dot ? strip_quotes(std::string_view(entry).substr(dot + 1)) : "";
    if (table.empty() || column.empty()) {
      if (mode == ParseMode::strict) {
        throw Error(ErrorCode::MalformedLlmOutput, "list entry is not table.column: " + entry);
      }
      warn(warnings, "skipping list entry that is not table.column: " + entry);
      continue;
    }
    links.add({table, column});
  }
  return links;
}

SchemaLinks validate_links(const SchemaLinks& links, const DatabaseCatalog& catalog,
                           Warnings* warnings) {
  SchemaLinks out;
  for (const auto& ref : links.links()) {
    if (auto canonical = catalog.resolve(ref.table, ref.column)) {
      out.add(*std::move(canonical));
    } else {
      warn(warnings, "dropping unresolvable link " + ref.table + "." + ref.column);
    }
  }
  return out;
}

LinkResult link_schema(std::string_view question, const DatabaseCatalog& catalog, Model& model,
                       const PromptLibrary& prompts) {
  LinkResult result;
  result.explanation = explain(question, render_compact(catalog), model, prompts);
  result.squeezed = squeeze(result.explanation.text, model, prompts);
  try {
    const auto parsed = parse_links(result.squeezed, ParseMode::lenient, &result.warnings);
    result.links = validate_links(parsed, catalog, &result.warnings);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoListFound) throw;
    result.warnings.push_back(e.what());
  }
  if (result.links.empty()) {
    result.fell_back_to_all_tables = true;
    result.warnings.push_back("no usable schema links; using all tables");
  }
  return result;
}

}  // namespace nl2sql
