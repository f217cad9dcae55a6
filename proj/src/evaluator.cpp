#include "nl2sql/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include "nl2sql/database.hpp"
#include "nl2sql/errors.hpp"
#include "nl2sql/sql_lexer.hpp"

namespace nl2sql {

using json = nlohmann::json;

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return "easy";
    case Difficulty::medium: return "medium";
    case Difficulty::hard: return "hard";
  }
  return "easy";
}

std::optional<Difficulty> difficulty_from_string(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "easy") return Difficulty::easy;
  if (t == "medium") return Difficulty::medium;
  if (t == "hard") return Difficulty::hard;
  return std::nullopt;
}

namespace {

bool is_clause_keyword(const Token& t) {
  static const std::set<std::string> kStop{
      "where", "group",  "order", "limit",  "join",      "inner",     "left",  "right",
      "full",  "cross",  "natural", "on",   "using",     "union",     "except", "intersect",
      "having", "window", "outer", "select", "from",     "values",    "offset", "as",
      "indexed", "not"};
  return t.kind == TokenKind::Word && kStop.count(to_lower(t.text)) > 0;
}

std::set<std::string> cte_names(const std::vector<Token>& tokens) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!tokens[i].is_keyword("WITH")) continue;
    std::size_t j = i + 1;
    if (j < tokens.size() && tokens[j].is_keyword("RECURSIVE")) ++j;
    const int depth = tokens[i].depth;
    while (j < tokens.size() && tokens[j].is_identifier()) {
      names.insert(to_lower(tokens[j].text));
      // Skip to the end of this CTE body: AS ( ... ) at the WITH depth.
      std::size_t k = j + 1;
      while (k < tokens.size() && !(tokens[k].text == "(" && tokens[k].depth == depth &&
                                    k > 0 && tokens[k - 1].is_keyword("AS"))) {
        ++k;
      }
      while (k < tokens.size() && !(tokens[k].text == ")" && tokens[k].depth == depth)) ++k;
      if (k + 1 < tokens.size() && tokens[k + 1].text == ",") {
        j = k + 2;
      } else {
        break;
      }
    }
  }
  return names;
}

}  // namespace

std::vector<std::string> referenced_tables(std::string_view sql) {
  const auto tokens = tokenize_sql(sql);
  const auto ctes = cte_names(tokens);
  std::vector<std::string> tables;
  const auto add = [&](const std::string& name) {
    const auto lower = to_lower(name);
    if (ctes.count(lower) == 0 &&
        std::find(tables.begin(), tables.end(), lower) == tables.end()) {
      tables.push_back(lower);
    }
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const bool from = tokens[i].is_keyword("FROM");
    if (!from && !tokens[i].is_keyword("JOIN")) continue;
    const int depth = tokens[i].depth;
    std::size_t j = i + 1;
    for (;;) {
      if (j >= tokens.size() || !tokens[j].is_identifier() || is_clause_keyword(tokens[j])) break;
      std::string name = tokens[j].text;
      ++j;
      // schema.table
      if (j + 1 < tokens.size() && tokens[j].text == "." && tokens[j + 1].is_identifier()) {
        name = tokens[j + 1].text;
        j += 2;
      }
      // Table-valued function such as json_each(...).
      if (j < tokens.size() && tokens[j].text == "(") break;
      add(name);
      if (j < tokens.size() && tokens[j].is_keyword("AS")) ++j;
      if (j < tokens.size() && tokens[j].is_identifier() && !is_clause_keyword(tokens[j])) ++j;
      if (from && j < tokens.size() && tokens[j].text == "," && tokens[j].depth == depth) {
        ++j;
        continue;
      }
      break;
    }
  }
  return tables;
}

Difficulty classify_difficulty(std::string_view sql) {
  const auto tokens = tokenize_sql(sql);
  if (referenced_tables(sql).size() > 1) return Difficulty::hard;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (tokens[i + 1].text != "(") continue;
    for (const char* agg : {"SUM", "AVG", "COUNT", "MIN", "MAX"}) {
      if (tokens[i].is_keyword(agg)) return Difficulty::medium;
    }
  }
  return Difficulty::easy;
}

namespace {

struct Canon {
  enum Kind { null, number, text } kind = null;
  double num = 0;
  std::string str;
};

std::optional<double> parse_number(const std::string& s) {
  if (s.empty() || std::isspace(static_cast<unsigned char>(s.front())) ||
      std::isspace(static_cast<unsigned char>(s.back()))) {
    return std::nullopt;
  }
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  // Reject hex floats and "inf"/"nan" spelled as words.
  if (s.find_first_of("xXnN") != std::string::npos) return std::nullopt;
  return d;
}

Canon canonical(const Value& v) {
  struct Visitor {
    Canon operator()(std::monostate) const { return {}; }
    Canon operator()(std::int64_t i) const { return {Canon::number, static_cast<double>(i), {}}; }
    Canon operator()(double d) const { return {Canon::number, d, {}}; }
    Canon operator()(const std::string& s) const {
      if (auto d = parse_number(s)) return {Canon::number, *d, {}};
      return {Canon::text, 0, s};
    }
  };
  return std::visit(Visitor{}, v);
}

bool numbers_equal(double a, double b) {
  if (a == b) return true;
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::fabs(a - b) <= kRealTolerance * std::max(std::fabs(a), std::fabs(b));
}

bool canon_equal(const Canon& a, const Canon& b) {
  if (a.kind != b.kind) return false;
  if (a.kind == Canon::number) return numbers_equal(a.num, b.num);
  return a.str == b.str;
}

bool canon_less(const Canon& a, const Canon& b) {
  if (a.kind != b.kind) return a.kind < b.kind;
  if (a.kind == Canon::number) {
    if (std::isnan(a.num) || std::isnan(b.num)) return !std::isnan(a.num) && std::isnan(b.num);
    return a.num < b.num;
  }
  return a.str < b.str;
}

using CanonRow = std::vector<Canon>;

CanonRow canonical_row(const Row& row) {
  CanonRow out;
  out.reserve(row.size());
  for (const auto& v : row) out.push_back(canonical(v));
  return out;
}

bool rows_equal(const CanonRow& a, const CanonRow& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!canon_equal(a[i], b[i])) return false;
  }
  return true;
}

bool row_less(const CanonRow& a, const CanonRow& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), canon_less);
}

// Kuhn's augmenting paths; tolerance makes equality non-transitive, so a
// sorted zip alone can miss a valid pairing.
bool perfect_matching(const std::vector<CanonRow>& pred, const std::vector<CanonRow>& gold) {
  const std::size_t n = pred.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (rows_equal(pred[i], gold[j])) adj[i].push_back(j);
    }
    if (adj[i].empty()) return false;
  }
  std::vector<std::ptrdiff_t> match_of_gold(n, -1);
  std::vector<char> visited;
  std::function<bool(std::size_t)> augment = [&](std::size_t i) {
    for (auto j : adj[i]) {
      if (visited[j]) continue;
      visited[j] = 1;
      if (match_of_gold[j] < 0 || augment(static_cast<std::size_t>(match_of_gold[j]))) {
        match_of_gold[j] = static_cast<std::ptrdiff_t>(i);
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    visited.assign(n, 0);
    if (!augment(i)) return false;
  }
  return true;
}

}  // namespace

bool compare_results(const ExecutionOutcome& pred, const ExecutionOutcome& gold,
                     std::string_view gold_sql) {
  if (!pred.ok() || !gold.ok()) return false;
  if (pred.columns.size() != gold.columns.size()) return false;
  if (pred.rows.size() != gold.rows.size()) return false;
  for (const auto* rows : {&pred.rows, &gold.rows}) {
    for (const auto& r : *rows) {
      if (r.size() != pred.columns.size()) return false;
    }
  }

  std::vector<CanonRow> p;
  std::vector<CanonRow> g;
  for (const auto& r : pred.rows) p.push_back(canonical_row(r));
  for (const auto& r : gold.rows) g.push_back(canonical_row(r));

  bool ordered = false;
  try {
    ordered = has_top_level_order_by(gold_sql);
  } catch (const Error&) {
  }
  if (ordered) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!rows_equal(p[i], g[i])) return false;
    }
    return true;
  }

  std::sort(p.begin(), p.end(), row_less);
  std::sort(g.begin(), g.end(), row_less);
  bool zipped = true;
  for (std::size_t i = 0; i < p.size() && zipped; ++i) zipped = rows_equal(p[i], g[i]);
  if (zipped) return true;
  return perfect_matching(p, g);
}

std::vector<EvalCase> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read dataset " + path.string());
  const auto base = path.parent_path();
  std::vector<EvalCase> cases;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    const auto where = path.string() + ":" + std::to_string(number);
    try {
      const auto j = json::parse(line);
      EvalCase c;
      c.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
      c.question = j.at("question").get<std::string>();
      c.gold_sql = j.at("gold_sql").get<std::string>();
      std::filesystem::path db = j.at("db").get<std::string>();
      c.db = db.is_absolute() ? db : base / db;
      if (j.contains("difficulty") && !j["difficulty"].is_null()) {
        c.difficulty = difficulty_from_string(j["difficulty"].get<std::string>());
        if (!c.difficulty) throw Error(ErrorCode::Config, where + ": unknown difficulty");
      }
      cases.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::Config, where + ": " + e.what());
    }
  }
  return cases;
}

std::optional<double> EvalReport::ex_for(Difficulty tier) const {
  auto it = tiers.find(tier);
  if (it == tiers.end() || it->second.total == 0) return std::nullopt;
  return static_cast<double>(it->second.matches) / static_cast<double>(it->second.total);
}

std::size_t EvalReport::matches() const {
  return static_cast<std::size_t>(
      std::count_if(cases.begin(), cases.end(), [](const CaseResult& c) { return c.match; }));
}

json EvalReport::to_json() const {
  json out;
  json case_list = json::array();
  for (const auto& c : cases) {
    case_list.push_back({{"id", c.eval_case.id},
                         {"question", c.eval_case.question},
                         {"difficulty", to_string(c.tier)},
                         {"gold_sql", c.eval_case.gold_sql},
                         {"predicted", c.predicted},
                         {"match", c.match},
                         {"reason", c.reason},
                         {"token_usage",
                          {{"prompt_tokens", c.usage.prompt_tokens},
                           {"completion_tokens", c.usage.completion_tokens}}},
                         {"trace_ref", c.trace_ref}});
  }
  out["cases"] = std::move(case_list);
  out["ex_overall"] = ex_overall ? json(*ex_overall) : json(nullptr);
  json by_tier = json::object();
  json counts = json::object();
  for (auto tier : {Difficulty::easy, Difficulty::medium, Difficulty::hard}) {
    const auto ex = ex_for(tier);
    by_tier[std::string(to_string(tier))] = ex ? json(*ex) : json(nullptr);
    const auto it = tiers.find(tier);
    const TierCount tc = it == tiers.end() ? TierCount{} : it->second;
    counts[std::string(to_string(tier))] = {{"total", tc.total}, {"matches", tc.matches}};
  }
  out["ex_by_difficulty"] = std::move(by_tier);
  out["counts"] = std::move(counts);
  out["token_usage"] = {{"prompt_tokens", usage.prompt_tokens},
                        {"completion_tokens", usage.completion_tokens}};
  return out;
}

std::string EvalReport::summary_table() const {
  std::string out;
  char line[96];
  std::snprintf(line, sizeof line, "%-9s %7s %8s %8s\n", "tier", "cases", "correct", "EX");
  out += line;
  const auto row = [&](const char* name, std::size_t total, std::size_t hits) {
    if (total == 0) {
      std::snprintf(line, sizeof line, "%-9s %7zu %8zu %8s\n", name, total, hits, "-");
    } else {
      std::snprintf(line, sizeof line, "%-9s %7zu %8zu %8.4f\n", name, total, hits,
                    static_cast<double>(hits) / static_cast<double>(total));
    }
    out += line;
  };
  for (auto tier : {Difficulty::easy, Difficulty::medium, Difficulty::hard}) {
    const auto it = tiers.find(tier);
    const TierCount tc = it == tiers.end() ? TierCount{} : it->second;
    row(std::string(to_string(tier)).c_str(), tc.total, tc.matches);
  }
  row("overall", cases.size(), matches());
  return out;
}

namespace {

CaseResult run_case(const EvalCase& c, const Predictor& predictor, const EvalOptions& options) {
  CaseResult r;
  r.eval_case = c;
  if (c.difficulty) {
    r.tier = *c.difficulty;
  } else {
    try {
      r.tier = classify_difficulty(c.gold_sql);
    } catch (const Error&) {
      r.tier = Difficulty::hard;
    }
  }

  std::optional<ExecutionOutcome> gold;
  try {
    const auto db = Database::open_readonly(c.db);
    gold = execute_readonly(c.gold_sql, db, options.executor);
  } catch (const Error& e) {
    r.reason = std::string("gold database unavailable: ") + e.what();
    return r;
  }

  Prediction p;
  try {
    p = predictor(c);
  } catch (const Error& e) {
    p.failure_reason = std::string(to_string(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    p.failure_reason = e.what();
  }
  r.predicted = p.code;
  r.usage = p.usage;
  r.trace_ref = p.trace_ref;

  if (!gold->ok()) {
    r.reason = "gold query failed: " + gold->error_message.value_or("");
  } else if (!p.outcome) {
    r.reason = p.failure_reason.empty() ? "no prediction" : p.failure_reason;
  } else if (!p.outcome->ok()) {
    r.reason = "prediction failed: " + p.outcome->error_message.value_or("");
  } else {
    r.match = compare_results(*p.outcome, *gold, c.gold_sql);
    if (!r.match) r.reason = "result mismatch";
  }
  return r;
}

}  // namespace

EvalReport evaluate(const std::vector<EvalCase>& dataset, const Predictor& predictor,
                    const EvalOptions& options) {
  std::vector<CaseResult> results(dataset.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (auto i = next++; i < dataset.size(); i = next++) {
      results[i] = run_case(dataset[i], predictor, options);
    }
  };
  const auto workers = std::max<std::size_t>(1, std::min(options.workers, dataset.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::stable_sort(results.begin(), results.end(), [](const CaseResult& a, const CaseResult& b) {
    return a.eval_case.id < b.eval_case.id;
  });

  EvalReport report;
  report.cases = std::move(results);
  for (const auto& c : report.cases) {
    auto& tc = report.tiers[c.tier];
    ++tc.total;
    if (c.match) ++tc.matches;
    report.usage += c.usage;
  }
  if (!report.cases.empty()) {
    report.ex_overall =
        static_cast<double>(report.matches()) / static_cast<double>(report.cases.size());
  }
  return report;
}

}  // namespace nl2sql
