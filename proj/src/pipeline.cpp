#include "nl2sql/pipeline.hpp"

#include "nl2sql/sql_lexer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace nl2sql {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(Backend backend) {
  switch (backend) {
    case Backend::sql: return "sql";
    case Backend::function: return "function";
    case Backend::script: return "script";
  }
  return "sql";
}

Backend backend_from_string(std::string_view text) {
  const auto lower = to_lower(trim(text));
  if (lower == "sql") return Backend::sql;
  if (lower == "function") return Backend::function;
  if (lower == "script" || lower == "python") return Backend::script;
  throw Error(ErrorCode::Config, "unknown backend: " + std::string(text));
}

namespace {

fs::path resolve_path(const json& value, const fs::path& base) {
  fs::path p = value.get<std::string>();
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

template <typename T>
T read_as(const json& j, std::string_view key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Config, "config key '" + std::string(key) + "' has the wrong type");
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (max_boost_attempts < 1) {
    throw Error(ErrorCode::Config, "max_boost_attempts must be at least 1");
  }
  if (llm.model_id.empty()) throw Error(ErrorCode::Config, "model_id must not be empty");
  if (llm.temperature < 0.0 || llm.temperature > 2.0) {
    throw Error(ErrorCode::Config, "temperature must lie in [0, 2]");
  }
  if (llm.max_tokens && *llm.max_tokens <= 0) {
    throw Error(ErrorCode::Config, "max_tokens must be positive");
  }
  if (recent_window.count() <= 0) throw Error(ErrorCode::Config, "recent_window must be positive");
  if (executor.timeout.count() <= 0) throw Error(ErrorCode::Config, "sql_timeout must be positive");
  if (executor.row_cap == 0) throw Error(ErrorCode::Config, "row_cap must be positive");
  if (script_timeout.count() <= 0) {
    throw Error(ErrorCode::Config, "script_timeout must be positive");
  }
  if (now) {
    try {
      parse_timestamp(*now);
    } catch (const Error& e) {
      throw Error(ErrorCode::Config, std::string("invalid 'now': ") + e.what());
    }
  }
  if (backend == Backend::script) {
    const fs::path interpreter = interpreter_path.value_or("python3");
    if (!find_interpreter(interpreter)) {
      throw Error(ErrorCode::InterpreterMissing,
                  "script backend needs an interpreter; not found: " + interpreter.string());
    }
  }
}

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
  PipelineConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "stages") {
      if (!value.is_object()) throw Error(ErrorCode::Config, "'stages' must be an object");
      for (const auto& [stage, on] : value.items()) {
        const bool enabled = read_as<bool>(on, stage);
        if (stage == "rewrite") c.stages.rewrite = enabled;
        else if (stage == "link") c.stages.link = enabled;
        else if (stage == "boost") c.stages.boost = enabled;
        else throw Error(ErrorCode::Config, "unknown stage: " + stage);
      }
    } else if (key == "backend") {
      c.backend = backend_from_string(read_as<std::string>(value, key));
    } else if (key == "max_boost_attempts") {
      c.max_boost_attempts = read_as<int>(value, key);
    } else if (key == "model_id") {
      c.llm.model_id = read_as<std::string>(value, key);
    } else if (key == "temperature") {
      c.llm.temperature = read_as<double>(value, key);
    } else if (key == "max_tokens") {
      c.llm.max_tokens = read_as<int>(value, key);
    } else if (key == "system_prompt") {
      c.llm.system_prompt = read_as<std::string>(value, key);
    } else if (key == "prompt_dir") {
      c.prompt_dir = resolve_path(value, base_dir);
    } else if (key == "trace_dir") {
      c.trace_dir = resolve_path(value, base_dir);
    } else if (key == "annotations") {
      c.annotations = resolve_path(value, base_dir);
    } else if (key == "glossary") {
      c.glossary = resolve_path(value, base_dir);
    } else if (key == "now") {
      c.now = read_as<std::string>(value, key);
    } else if (key == "location") {
      c.location = read_as<std::string>(value, key);
    } else if (key == "recent_window_minutes") {
      c.recent_window = std::chrono::minutes(read_as<int>(value, key));
    } else if (key == "replace_mode") {
      const auto mode = read_as<std::string>(value, key);
      if (mode == "local") c.replace_mode = ReplaceMode::local;
      else if (mode == "llm") c.replace_mode = ReplaceMode::llm;
      else throw Error(ErrorCode::Config, "replace_mode must be 'local' or 'llm'");
    } else if (key == "samples_per_column") {
      c.catalog.samples_per_column = read_as<std::size_t>(value, key);
    } else if (key == "max_sample_length") {
      c.catalog.max_sample_length = read_as<std::size_t>(value, key);
    } else if (key == "sql_timeout_ms") {
      c.executor.timeout = std::chrono::milliseconds(read_as<std::int64_t>(value, key));
    } else if (key == "row_cap") {
      c.executor.row_cap = read_as<std::size_t>(value, key);
    } else if (key == "interpreter") {
      // Bare names are looked up on PATH, so only paths with a separator resolve.
      const auto text = read_as<std::string>(value, key);
      c.interpreter_path = text.find('/') == std::string::npos ? fs::path(text)
                                                                : resolve_path(value, base_dir);
    } else if (key == "script_timeout_ms") {
      c.script_timeout = std::chrono::milliseconds(read_as<std::int64_t>(value, key));
    } else if (key == "script_workdir") {
      c.script_workdir = resolve_path(value, base_dir);
    } else if (key == "include_timings") {
      c.include_timings = read_as<bool>(value, key);
    } else {
      throw Error(ErrorCode::Config, "unknown config key: " + key);
    }
  }
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot read config file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, "config file " + path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

json PipelineConfig::to_json() const {
  json j = {
      {"stages", {{"rewrite", stages.rewrite}, {"link", stages.link}, {"boost", stages.boost}}},
      {"backend", std::string(to_string(backend))},
      {"max_boost_attempts", max_boost_attempts},
      {"model_id", llm.model_id},
      {"temperature", llm.temperature},
      {"recent_window_minutes", recent_window.count()},
      {"replace_mode", replace_mode == ReplaceMode::llm ? "llm" : "local"},
      {"samples_per_column", catalog.samples_per_column},
      {"max_sample_length", catalog.max_sample_length},
      {"sql_timeout_ms", executor.timeout.count()},
      {"row_cap", executor.row_cap},
      {"script_timeout_ms", script_timeout.count()},
      {"include_timings", include_timings},
  };
  if (llm.max_tokens) j["max_tokens"] = *llm.max_tokens;
  if (!llm.system_prompt.empty()) j["system_prompt"] = llm.system_prompt;
  if (prompt_dir) j["prompt_dir"] = prompt_dir->string();
  if (trace_dir) j["trace_dir"] = trace_dir->string();
  if (annotations) j["annotations"] = annotations->string();
  if (glossary) j["glossary"] = glossary->string();
  if (now) j["now"] = *now;
  if (location) j["location"] = *location;
  if (interpreter_path) j["interpreter"] = interpreter_path->string();
  if (script_workdir) j["script_workdir"] = script_workdir->string();
  return j;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json value_json(const Value& v) {
  if (std::holds_alternative<std::monostate>(v)) return nullptr;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::get<std::string>(v);
}

json usage_json(const TokenUsage& usage) {
  return {{"prompt_tokens", usage.prompt_tokens},
          {"completion_tokens", usage.completion_tokens}};
}

json warnings_json(const Warnings& warnings) { return json(warnings); }

json links_json(const SchemaLinks& links) {
  json out = json::array();
  for (const auto& l : links.links()) out.push_back(l.table + "." + l.column);
  return out;
}

json candidate_json(const SqlCandidate& c) {
  return {{"code", c.sql_text},
          {"attempt_index", c.attempt_index},
          {"origin", std::string(to_string(c.origin))}};
}

}  // namespace

json outcome_to_json(const ExecutionOutcome& outcome, bool include_timings) {
  json rows = json::array();
  for (const auto& row : outcome.rows) {
    json r = json::array();
    for (const auto& v : row) r.push_back(value_json(v));
    rows.push_back(std::move(r));
  }
  json j = {{"status", std::string(to_string(outcome.status))},
            {"columns", outcome.columns},
            {"rows", std::move(rows)},
            {"truncated", outcome.truncated}};
  if (outcome.error_message) j["error_message"] = *outcome.error_message;
  if (include_timings) j["elapsed_ms"] = outcome.elapsed.count();
  return j;
}

std::string dump_json(const json& j) {
  return j.dump(2, ' ', false, json::error_handler_t::replace);
}

json AnswerRecord::to_json(bool include_timings) const {
  json stage_list = json::array();

  json rw = {{"stage", "rewrite"}, {"enabled", stages.rewrite}};
  if (rewrite) {
    json terms = json::array();
    for (const auto& t : rewrite->terms) {
      terms.push_back({{"term", t.surface}, {"category", std::string(to_string(t.category))}});
    }
    rw["terms"] = std::move(terms);
    rw["mapping"] = rewrite->mapping;
    rw["rewritten"] = rewrite->rewritten;
    rw["identity"] = rewrite->is_identity();
    rw["warnings"] = warnings_json(rewrite->warnings);
  }
  stage_list.push_back(std::move(rw));

  json lk = {{"stage", "link"}, {"enabled", stages.link}, {"used_all_tables", used_all_tables}};
  if (link) {
    lk["explanation"] = link->explanation.text;
    lk["squeezed"] = link->squeezed;
    lk["links"] = links_json(link->links);
    lk["warnings"] = warnings_json(link->warnings);
  }
  stage_list.push_back(std::move(lk));

  json gen = {{"stage", "generate"}, {"enabled", true}, {"backend", std::string(to_string(backend))}};
  if (initial) gen["candidate"] = candidate_json(*initial);
  if (function_call) gen["function_call"] = function_call->to_json();
  if (call_validation) {
    json issues = json::array();
    for (const auto& issue : call_validation->issues) {
      issues.push_back({{"kind", std::string(to_string(issue.kind))},
                        {"offender", issue.offender},
                        {"detail", issue.detail}});
    }
    gen["validation_issues"] = std::move(issues);
  }
  if (!exports.empty()) {
    json files = json::array();
    for (const auto& e : exports) {
      files.push_back({{"table", e.table}, {"file", prompt_path(e)}, {"rows", e.row_count}});
    }
    gen["exports"] = std::move(files);
  }
  stage_list.push_back(std::move(gen));

  json bs = {{"stage", "boost"}, {"enabled", stages.boost && backend != Backend::function}};
  if (boost) {
    json attempts = json::array();
    for (const auto& a : boost->attempts) {
      attempts.push_back({{"candidate", candidate_json(a.candidate)},
                          {"outcome", outcome_to_json(a.outcome, include_timings)}});
    }
    bs["attempts"] = std::move(attempts);
    bs["termination"] = std::string(to_string(boost->termination));
    if (boost->error_note) bs["error_note"] = *boost->error_note;
  }
  stage_list.push_back(std::move(bs));

  json j = {{"question", question},
            {"effective_question", effective_question},
            {"db", db},
            {"backend", std::string(to_string(backend))},
            {"stages", std::move(stage_list)},
            {"final_code", final_code},
            {"answered", answered()},
            {"usage", usage_json(usage)},
            {"llm_calls", llm_calls}};
  if (final_outcome) j["result"] = outcome_to_json(*final_outcome, include_timings);
  if (!failure_reason.empty()) j["failure_reason"] = failure_reason;
  if (error) {
    j["error"] = {{"stage", error->stage},
                  {"code", std::string(to_string(error->code))},
                  {"message", error->message}};
  }
  if (include_timings) {
    json t = json::object();
    for (const auto& [stage, ms] : timings) t[stage] = ms.count();
    j["timings_ms"] = std::move(t);
  }
  return j;
}

std::string format_table(const ExecutionOutcome& outcome, std::size_t max_rows) {
  if (!outcome.ok()) return "error: " + outcome.error_message.value_or("execution failed") + "\n";
  const std::size_t shown = std::min(max_rows, outcome.rows.size());
  std::vector<std::size_t> widths;
  for (const auto& c : outcome.columns) widths.push_back(c.size());
  std::vector<std::vector<std::string>> cells;
  for (std::size_t r = 0; r < shown; ++r) {
    std::vector<std::string> line;
    for (std::size_t c = 0; c < outcome.rows[r].size(); ++c) {
      auto text = is_null(outcome.rows[r][c]) ? std::string("NULL")
                                               : render_value(outcome.rows[r][c]);
      if (c < widths.size()) widths[c] = std::max(widths[c], text.size());
      line.push_back(std::move(text));
    }
    cells.push_back(std::move(line));
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      if (c) out << " | ";
      out << line[c];
      if (c + 1 < line.size() && c < widths.size()) {
        out << std::string(widths[c] - line[c].size(), ' ');
      }
    }
    out << '\n';
  };
  emit(outcome.columns);
  std::vector<std::string> rule;
  for (const auto w : widths) rule.emplace_back(w, '-');
  emit(rule);
  for (const auto& line : cells) emit(line);
  out << "(" << outcome.rows.size() << (outcome.rows.size() == 1 ? " row" : " rows");
  if (outcome.truncated) out << ", truncated";
  if (shown < outcome.rows.size()) out << ", " << shown << " shown";
  out << ")\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

PromptLibrary load_prompts(const PipelineConfig& config) {
  if (config.prompt_dir) return PromptLibrary::from_directory(*config.prompt_dir);
  return PromptLibrary::builtin();
}

std::string sanitize_name(std::string_view name) {
  std::string out;
  for (const char ch : name) {
    const bool keep = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' ||
                      ch == '.';
    out += keep ? ch : '_';
  }
  if (out.empty() || out.front() == '.') out.insert(out.begin(), 'q');
  return out;
}

class StageTimer {
 public:
  StageTimer(AnswerRecord& record, std::string stage)
      : record_(record), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    record_.timings[stage_] = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start_);
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  AnswerRecord& record_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

Pipeline::Pipeline(PipelineConfig config, LlmClient& llm)
    : config_(std::move(config)), llm_(llm), prompts_(load_prompts(config_)) {
  config_.validate();
  if (config_.glossary) glossary_ = load_glossary(*config_.glossary);
  if (config_.annotations) annotations_ = load_annotations(*config_.annotations);
}

RewriteContext Pipeline::rewrite_context() const {
  RewriteContext ctx;
  if (config_.now) {
    ctx.current_timestamp = parse_timestamp(*config_.now);
  } else {
    ctx.current_timestamp =
        std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  }
  ctx.location = config_.location;
  ctx.glossary = glossary_;
  return ctx;
}

std::shared_ptr<const DatabaseCatalog> Pipeline::catalog_for(const fs::path& db,
                                                             Warnings* warnings) {
  const auto key = fs::weakly_canonical(db).string();
  std::lock_guard lock(catalog_mutex_);
  if (const auto it = catalogs_.find(key); it != catalogs_.end()) return it->second;
  const auto handle = Database::open_readonly(db);
  auto catalog = std::make_shared<const DatabaseCatalog>(build_catalog(
      handle, annotations_ ? &*annotations_ : nullptr, config_.catalog, warnings));
  catalogs_.emplace(key, catalog);
  return catalog;
}

fs::path Pipeline::make_script_workdir(std::string_view question, std::string_view trace_name) {
  if (config_.script_workdir) {
    const auto name = trace_name.empty() ? "q-" + sha256_hex(question).substr(0, 12)
                                         : sanitize_name(trace_name);
    auto dir = *config_.script_workdir / name;
    fs::create_directories(dir);
    return dir;
  }
  auto pattern = (fs::temp_directory_path() / "nl2sql-script-XXXXXX").string();
  if (::mkdtemp(pattern.data()) == nullptr) {
    throw Error(ErrorCode::Io, "cannot create a script working directory");
  }
  return pattern;
}

void Pipeline::run_stages(AnswerRecord& record, const Database& db,
                          const DatabaseCatalog& catalog, Model& model) {
  std::string stage = "rewrite";
  try {
    if (config_.stages.rewrite) {
      StageTimer timer(record, stage);
      RewriteOptions options;
      options.recent_window = config_.recent_window;
      options.replace_mode = config_.replace_mode;
      options.prompts = &prompts_;
      record.rewrite = rewrite(record.question, rewrite_context(), model, options);
      record.effective_question = record.rewrite->rewritten;
    } else {
      RewriteResult identity;
      identity.original = record.question;
      identity.rewritten = record.question;
      record.rewrite = std::move(identity);
    }

    stage = "link";
    const SchemaLinks* links = nullptr;
    if (config_.stages.link) {
      StageTimer timer(record, stage);
      record.link = link_schema(record.effective_question, catalog, model, prompts_);
      if (!record.link->fell_back_to_all_tables) links = &record.link->links;
    }
    record.used_all_tables = links == nullptr;

    stage = "generate";
    const int attempts = config_.stages.boost ? config_.max_boost_attempts : 1;
    switch (config_.backend) {
      case Backend::sql: {
        GenerationPrompt prompt;
        {
          StageTimer timer(record, stage);
          prompt = build_generation_prompt(record.effective_question, catalog, links, prompts_);
          record.initial = generate_sql(prompt, model, prompts_);
        }
        stage = "boost";
        StageTimer timer(record, stage);
        SqlEnvironment env(db, config_.executor);
        record.boost = boost(*record.initial, env, {record.effective_question, prompt.schema_block},
                             model, attempts, prompts_);
        break;
      }
      case Backend::function: {
        std::string sql;
        {
          StageTimer timer(record, stage);
          record.function_call =
              select_and_fill(record.effective_question, catalog, model, links, prompts_);
          record.call_validation = validate_call(*record.function_call, catalog, &db);
          if (!record.call_validation->ok()) {
            record.failure_reason = "invalid function call: " + record.call_validation->describe();
            return;
          }
          sql = compile(*record.function_call).sql_text;
          record.initial = SqlCandidate{sql, 0, CandidateOrigin::initial};
        }
        // A compiled call runs once; repairs would bypass the template contract.
        stage = "boost";
        StageTimer timer(record, stage);
        BoostTrace trace;
        trace.final = *record.initial;
        auto outcome = execute_readonly(sql, db, config_.executor);
        if (outcome.ok() && !is_empty(outcome)) trace.termination = Termination::success_nonempty;
        trace.attempts.push_back({*record.initial, std::move(outcome)});
        record.boost = std::move(trace);
        break;
      }
      case Backend::script: {
        GenerationPrompt prompt;
        std::string code;
        fs::path workdir;
        {
          StageTimer timer(record, stage);
          workdir = make_script_workdir(record.question, {});
          record.script_workdir = workdir;
          record.exports = export_tables_csv(db, catalog, links, workdir);
          prompt = build_script_prompt(record.effective_question, record.exports, catalog,
                                       prompts_);
          const auto reply = model.ask(prompt.render(prompts_));
          code = extract_code(reply.text);
          record.initial = SqlCandidate{code, 0, CandidateOrigin::initial};
        }
        stage = "boost";
        StageTimer timer(record, stage);
        const auto interpreter = find_interpreter(config_.interpreter_path.value_or("python3"));
        if (!interpreter) throw Error(ErrorCode::InterpreterMissing, "no Python interpreter");
        ScriptEnvironment env(workdir, *interpreter, config_.script_timeout);
        record.boost = boost(*record.initial, env,
                             {record.effective_question, prompt.schema_block}, model, attempts,
                             prompts_);
        break;
      }
    }
  } catch (const Error& e) {
    record.error = StageError{stage, e.code(), e.what()};
    record.failure_reason = stage + " failed: " + e.what();
    return;
  }

  if (record.boost->error_code && is_gateway_error(*record.boost->error_code)) {
    record.error = StageError{"boost", *record.boost->error_code, *record.boost->error_note};
  }
  record.final_code = record.boost->final.sql_text;
  record.final_outcome = record.boost->attempts.back().outcome;
  if (!record.final_outcome->ok()) {
    record.failure_reason = record.final_outcome->error_message.value_or("execution failed");
  } else if (record.boost->error_note) {
    record.failure_reason = *record.boost->error_note;
  }
}

AnswerRecord Pipeline::run_question(std::string_view question, const fs::path& db,
                                    std::string_view trace_name) {
  AnswerRecord record;
  record.question = std::string(question);
  record.effective_question = record.question;
  record.db = db.filename().string();
  record.backend = config_.backend;
  record.stages = config_.stages;
  if (config_.backend == Backend::function) record.stages.boost = false;

  if (trim(question).empty()) {
    record.error = StageError{"input", ErrorCode::PreconditionViolated, "empty question"};
    record.failure_reason = "empty question";
    return record;
  }

  const auto catalog = catalog_for(db);
  const auto handle = Database::open_readonly(db);
  UsageMeter meter(llm_);
  Model model(meter, config_.llm);
  run_stages(record, handle, *catalog, model);
  record.usage = meter.total();
  record.llm_calls = meter.calls();
  write_trace(record, trace_name);
  return record;
}

std::optional<fs::path> Pipeline::write_trace(const AnswerRecord& record,
                                              std::string_view trace_name) const {
  if (!config_.trace_dir) return std::nullopt;
  fs::create_directories(*config_.trace_dir);
  const auto name = trace_name.empty() ? "q-" + sha256_hex(record.question).substr(0, 12)
                                       : sanitize_name(trace_name);
  const auto path = *config_.trace_dir / (name + ".json");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write trace: " + path.string());
  out << dump_json(record.to_json(config_.include_timings)) << '\n';
  return path;
}

Prediction Pipeline::predict(const EvalCase& eval_case) {
  const auto record = run_question(eval_case.question, eval_case.db, eval_case.id);
  if (record.error && is_gateway_error(record.error->code)) {
    // Gateway failures abort the run rather than counting as wrong answers.
    throw Error(record.error->code, record.error->message);
  }
  Prediction p;
  p.code = record.final_code;
  p.outcome = record.final_outcome;
  p.failure_reason = record.failure_reason;
  p.usage = record.usage;
  if (config_.trace_dir) p.trace_ref = sanitize_name(eval_case.id) + ".json";
  return p;
}

}  // namespace nl2sql
