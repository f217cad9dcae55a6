#include "nl2sql/query_rewriter.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nl2sql/sql_lexer.hpp"

namespace nl2sql {

using json = nlohmann::json;
namespace chr = std::chrono;

std::string_view to_string(TermCategory category) {
  switch (category) {
    case TermCategory::temporal: return "temporal";
    case TermCategory::spatial: return "spatial";
    case TermCategory::domain: return "domain";
  }
  return "domain";
}

TermCategory category_from_string(std::string_view text) {
  const auto lower = to_lower(trim(text));
  if (lower == "temporal" || lower == "time") return TermCategory::temporal;
  if (lower == "spatial" || lower == "location" || lower == "place") return TermCategory::spatial;
  return TermCategory::domain;
}

std::string format_timestamp(Timestamp ts) {
  const auto day = chr::floor<chr::days>(ts);
  const chr::year_month_day ymd{day};
  const int year = static_cast<int>(ymd.year());
  if (!ymd.ok() || year < 0 || year > 9999) {
    throw Error(ErrorCode::MissingContext, "timestamp cannot be rendered as YYYY-MM-DD HH:MM");
  }
  const auto minutes = chr::duration_cast<chr::minutes>(ts - day).count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d", year,
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(minutes / 60), static_cast<int>(minutes % 60));
  return buf;
}

namespace {

std::string format_date(Timestamp ts) { return format_timestamp(ts).substr(0, 10); }

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  const auto s = trim(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char sep = 0;
  const int n = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &sec);
  if (n < 6 || (sep != ' ' && sep != 'T')) {
    throw Error(ErrorCode::Config, "timestamp must look like YYYY-MM-DD HH:MM, got: " + s);
  }
  const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(mo)},
                                chr::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 59) {
    throw Error(ErrorCode::Config, "invalid timestamp: " + s);
  }
  return chr::sys_days{ymd} + chr::hours{h} + chr::minutes{mi} + chr::seconds{sec};
}

std::map<std::string, std::string> load_glossary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read glossary " + path.string());
  try {
    const auto doc = json::parse(in);
    std::map<std::string, std::string> out;
    for (const auto& [term, definition] : doc.items()) {
      out[term] = definition.get<std::string>();
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Config, "glossary " + path.string() + ": " + e.what());
  }
}

namespace {

bool is_word_byte(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool boundary_ok(std::string_view text, std::size_t pos, std::size_t len) {
  const std::string_view term = text.substr(pos, len);
  if (pos > 0 && is_word_byte(text[pos - 1]) && is_word_byte(term.front())) return false;
  const auto end = pos + len;
  if (end < text.size() && is_word_byte(text[end]) && is_word_byte(term.back())) return false;
  return true;
}

constexpr std::array kInstantTerms{"now",           "right now",    "currently", "current",
                                   "at present",    "presently",    "at the moment",
                                   "at this moment", "this moment"};
constexpr std::array kRecentTerms{"just now", "recently", "a moment ago", "just recently"};

template <std::size_t N>
bool in_list(const std::array<const char*, N>& list, std::string_view term) {
  return std::any_of(list.begin(), list.end(),
                     [&](const char* t) { return iequals(t, trim(term)); });
}

bool has_temporal_policy(std::string_view term) {
  return in_list(kInstantTerms, term) || in_list(kRecentTerms, term) || iequals(term, "today") ||
         iequals(term, "yesterday");
}

std::optional<std::string> apply_temporal_policy(std::string_view term, const RewriteContext& ctx,
                                                 const RewriteOptions& options) {
  const auto now = ctx.current_timestamp;
  if (in_list(kInstantTerms, term)) return format_timestamp(now);
  if (in_list(kRecentTerms, term)) {
    return "between " + format_timestamp(now - options.recent_window) + " and " +
           format_timestamp(now);
  }
  if (iequals(term, "today")) return format_date(now);
  if (iequals(term, "yesterday")) return format_date(now - chr::days{1});
  return std::nullopt;
}

std::string render_glossary(const std::map<std::string, std::string>& glossary) {
  if (glossary.empty()) return "(none)";
  std::string out;
  for (const auto& [term, definition] : glossary) out += "- " + term + ": " + definition + "\n";
  if (!out.empty()) out.pop_back();
  return out;
}

TemplateVars context_vars(std::string_view question, const RewriteContext& ctx) {
  return {{"question", std::string(question)},
          {"timestamp", format_timestamp(ctx.current_timestamp)},
          {"location", ctx.location.value_or("(unknown)")},
          {"glossary", render_glossary(ctx.glossary)}};
}

const PromptLibrary& prompts_of(const RewriteOptions& options) {
  return options.prompts != nullptr ? *options.prompts : PromptLibrary::builtin();
}

std::optional<json> first_json_array(std::string_view text) {
  const auto open = text.find('[');
  const auto close = text.rfind(']');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
    return std::nullopt;
  }
  try {
    auto j = json::parse(text.substr(open, close - open + 1));
    if (j.is_array()) return j;
  } catch (const json::exception&) {
  }
  return std::nullopt;
}

std::string first_line_unquoted(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (t.empty() || t.rfind("```", 0) == 0) continue;
    if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front()) {
      t = t.substr(1, t.size() - 2);
    }
    return t;
  }
  return {};
}

}  // namespace

bool contains_token(std::string_view text, std::string_view term) {
  if (term.empty()) return false;
  for (auto pos = text.find(term); pos != std::string_view::npos; pos = text.find(term, pos + 1)) {
    if (boundary_ok(text, pos, term.size())) return true;
  }
  return false;
}

std::vector<VagueTerm> extract_vague_terms(std::string_view question, const RewriteContext& ctx,
                                           Model& model, const RewriteOptions& options,
                                           Warnings* warnings) {
  if (trim(question).empty()) {
    throw Error(ErrorCode::PreconditionViolated, "question must not be empty");
  }
  const auto prompt = prompts_of(options).render("rewrite_extract", context_vars(question, ctx));
  const auto reply = model.ask(prompt).text;

  const auto list = first_json_array(reply);
  if (!list) {
    warn(warnings, "vague-term extraction reply is not a JSON list; assuming no vague terms");
    return {};
  }
  std::vector<VagueTerm> terms;
  for (const auto& item : *list) {
    VagueTerm term;
    if (item.is_string()) {
      term.surface = item.get<std::string>();
      term.category =
          has_temporal_policy(term.surface) ? TermCategory::temporal : TermCategory::domain;
    } else if (item.is_object() && item.contains("term") && item["term"].is_string()) {
      term.surface = item["term"].get<std::string>();
      term.category = category_from_string(item.value("category", std::string("domain")));
    } else {
      warn(warnings, "skipping malformed vague-term entry: " + item.dump());
      continue;
    }
    if (!contains_token(question, term.surface)) {
      warn(warnings, "dropping vague term not present in the question: \"" + term.surface + "\"");
      continue;
    }
    const bool dup = std::any_of(terms.begin(), terms.end(),
                                 [&](const VagueTerm& t) { return t.surface == term.surface; });
    if (!dup) terms.push_back(std::move(term));
  }
  return terms;
}

TermMapping transform_terms(const std::vector<VagueTerm>& terms, std::string_view question,
                            const RewriteContext& ctx, Model& model,
                            const RewriteOptions& options) {
  TermMapping mapping;
  for (const auto& term : terms) {
    auto hit = std::find_if(ctx.glossary.begin(), ctx.glossary.end(),
                            [&](const auto& entry) { return iequals(entry.first, term.surface); });
    if (hit != ctx.glossary.end()) {
      mapping[term.surface] = hit->second;
      continue;
    }
    if (term.category == TermCategory::temporal) {
      if (auto explicit_time = apply_temporal_policy(term.surface, ctx, options)) {
        mapping[term.surface] = *explicit_time;
        continue;
      }
    }
    auto vars = context_vars(question, ctx);
    vars["term"] = term.surface;
    vars["category"] = std::string(to_string(term.category));
    const auto reply = model.ask(prompts_of(options).render("rewrite_transform", vars)).text;
    auto replacement = first_line_unquoted(reply);
    if (replacement.empty()) {
      throw Error(ErrorCode::MalformedLlmOutput,
                  "empty transformation for vague term \"" + term.surface + "\"");
    }
    mapping[term.surface] = std::move(replacement);
  }
  return mapping;
}

std::string replace_terms(std::string_view question, const TermMapping& mapping) {
  std::vector<const std::pair<const std::string, std::string>*> keys;
  for (const auto& entry : mapping) {
    if (!contains_token(question, entry.first)) {
      throw Error(ErrorCode::KeyAbsent, "replacement key \"" + entry.first + "\" not in question");
    }
    keys.push_back(&entry);
  }
  std::stable_sort(keys.begin(), keys.end(),
                   [](auto* a, auto* b) { return a->first.size() > b->first.size(); });

  std::string out;
  std::size_t pos = 0;
  while (pos < question.size()) {
    bool replaced = false;
    for (const auto* entry : keys) {
      const auto& key = entry->first;
      if (question.compare(pos, key.size(), key) == 0 && boundary_ok(question, pos, key.size())) {
        out += entry->second;
        pos += key.size();
        replaced = true;
        break;
      }
    }
    if (!replaced) out += question[pos++];
  }
  return out;
}

RewriteResult rewrite(std::string_view question, const RewriteContext& ctx, Model& model,
                      const RewriteOptions& options) {
  RewriteResult result;
  result.original = std::string(question);
  result.rewritten = result.original;

  auto terms = extract_vague_terms(question, ctx, model, options, &result.warnings);
  if (terms.empty()) return result;

  TermMapping mapping;
  try {
    mapping = transform_terms(terms, question, ctx, model, options);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MalformedLlmOutput) throw;
    result.warnings.push_back(std::string("rewrite skipped: ") + e.what());
    return result;
  }

  result.terms = std::move(terms);
  result.mapping = std::move(mapping);
  result.rewritten = replace_terms(question, result.mapping);

  if (options.replace_mode == ReplaceMode::llm) {
    std::string replacements;
    for (const auto& [term, text] : result.mapping) {
      replacements += "- \"" + term + "\" -> \"" + text + "\"\n";
    }
    const auto reply =
        model.ask(prompts_of(options).render(
                      "rewrite_replace",
                      {{"question", result.original}, {"replacements", replacements}}))
            .text;
    auto line = first_line_unquoted(reply);
    if (line.empty()) {
      result.warnings.push_back("model replacement was empty; kept local substitution");
    } else {
      result.rewritten = std::move(line);
    }
  }
  return result;
}

}  // namespace nl2sql
