#include "cli.hpp"

#include <atomic>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nl2sql/evaluator.hpp"
#include "nl2sql/llm_gateway.hpp"
#include "nl2sql/pipeline.hpp"
#include "nl2sql/schema_catalog.hpp"
#include "nl2sql/sql_lexer.hpp"

namespace nl2sql {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::string record;
  std::string replay;
  std::string backend;
  bool no_rewrite = false;
  bool no_link = false;
  bool no_boost = false;
  int max_attempts = 0;
  std::string model;
  double temperature = 0.0;
  std::string prompts;
  std::string trace_dir;
  std::string annotations;
  std::string glossary;
  std::string now;
  std::string location;
  std::string interpreter;
  bool timings = false;
};

struct Options {
  CLI::Option* backend = nullptr;
  CLI::Option* max_attempts = nullptr;
  CLI::Option* model = nullptr;
  CLI::Option* temperature = nullptr;
};

PipelineConfig resolve_config(const Flags& f, const Options& o) {
  PipelineConfig c = f.config.empty() ? PipelineConfig{} : PipelineConfig::load(f.config);
  if (o.backend->count() > 0) c.backend = backend_from_string(f.backend);
  if (f.no_rewrite) c.stages.rewrite = false;
  if (f.no_link) c.stages.link = false;
  if (f.no_boost) c.stages.boost = false;
  if (o.max_attempts->count() > 0) c.max_boost_attempts = f.max_attempts;
  if (o.model->count() > 0) c.llm.model_id = f.model;
  if (o.temperature->count() > 0) c.llm.temperature = f.temperature;
  if (!f.prompts.empty()) c.prompt_dir = f.prompts;
  if (!f.trace_dir.empty()) c.trace_dir = f.trace_dir;
  if (!f.annotations.empty()) c.annotations = f.annotations;
  if (!f.glossary.empty()) c.glossary = f.glossary;
  if (!f.now.empty()) c.now = f.now;
  if (!f.location.empty()) c.location = f.location;
  if (!f.interpreter.empty()) c.interpreter_path = f.interpreter;
  if (f.timings) c.include_timings = true;
  c.validate();
  return c;
}

std::unique_ptr<Gateway> make_gateway(const Flags& f) {
  if (!f.replay.empty()) return Gateway::replay(fs::path(f.replay));
  if (!f.record.empty()) {
    return Gateway::record(std::make_unique<HttpTransport>(HttpSettings::from_env()), f.record);
  }
  return Gateway::live(std::make_unique<HttpTransport>(HttpSettings::from_env()));
}

void print_error(std::ostream& err, const Error& e) {
  err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
}

int print_answer(const AnswerRecord& record, bool as_json, std::ostream& out, std::ostream& err) {
  if (as_json) {
    out << dump_json(record.to_json()) << '\n';
  } else {
    if (record.effective_question != record.question) {
      out << "Rewritten: " << record.effective_question << '\n';
    }
    if (record.link && !record.used_all_tables) {
      out << "Links: " << record.link->links.format() << '\n';
    }
    if (!record.final_code.empty()) {
      out << (record.backend == Backend::script ? "Script:\n" : "SQL:\n")
          << record.final_code << "\n\n";
    }
    if (record.final_outcome && record.final_outcome->ok()) {
      out << format_table(*record.final_outcome);
    }
    if (!record.failure_reason.empty()) out << "No answer: " << record.failure_reason << '\n';
  }
  if (record.error && (is_gateway_error(record.error->code) ||
                       record.error->code == ErrorCode::Config)) {
    err << "error: " << to_string(record.error->code) << ": " << record.error->message << '\n';
    return 1;
  }
  return 0;
}

int run_catalog(const std::string& db_path, const Flags& f, std::ostream& out,
                std::ostream& err) {
  std::optional<Annotations> annotations;
  std::string annotations_path = f.annotations;
  CatalogOptions options;
  if (!f.config.empty()) {
    const auto c = PipelineConfig::load(f.config);
    if (annotations_path.empty() && c.annotations) annotations_path = c.annotations->string();
    options = c.catalog;
  }
  if (!annotations_path.empty()) annotations = load_annotations(annotations_path);
  Warnings warnings;
  const auto db = Database::open_readonly(db_path);
  const auto catalog =
      build_catalog(db, annotations ? &*annotations : nullptr, options, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  out << "# Compact\n" << render_compact(catalog) << "\n\n# Enriched\n"
      << render_enriched(catalog);
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::istream& in, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Natural-language questions to SQL over SQLite databases"};
  app.name("nl2sql");
  app.require_subcommand(1);

  Flags f;
  Options o;
  app.add_option("--config", f.config, "Pipeline configuration (JSON)");
  auto* record = app.add_option("--record", f.record, "Call the live endpoint and append "
                                                      "every exchange to this transcript");
  auto* replay = app.add_option("--replay", f.replay, "Answer every model call from this transcript");
  record->excludes(replay);
  o.backend = app.add_option("--backend", f.backend, "sql, function or script");
  app.add_flag("--no-rewrite", f.no_rewrite, "Skip query rewriting");
  app.add_flag("--no-link", f.no_link, "Skip schema linking and use all tables");
  app.add_flag("--no-boost", f.no_boost, "Execute the first candidate once");
  o.max_attempts =
      app.add_option("--max-attempts", f.max_attempts, "Boost budget including the first try");
  o.model = app.add_option("--model", f.model, "Model identifier");
  o.temperature = app.add_option("--temperature", f.temperature, "Sampling temperature");
  app.add_option("--prompts", f.prompts, "Directory overriding prompt templates");
  app.add_option("--trace-dir", f.trace_dir, "Write one JSON trace per question here");
  app.add_option("--annotations", f.annotations, "Column meanings (JSON)");
  app.add_option("--glossary", f.glossary, "Domain term definitions (JSON)");
  app.add_option("--now", f.now, "Fixed clock, YYYY-MM-DD HH:MM");
  app.add_option("--location", f.location, "Location used for spatial terms");
  app.add_option("--interpreter", f.interpreter, "Python interpreter for the script backend");
  app.add_flag("--timings", f.timings, "Include timings in traces");

  std::string db_path;
  std::string question;
  std::string dataset;
  std::string report_path;
  std::size_t workers = 1;
  bool strict = false;
  bool as_json = false;

  auto* catalog_cmd = app.add_subcommand("catalog", "Print compact and enriched schema");
  catalog_cmd->add_option("db", db_path, "SQLite database")->required();
  auto* ask_cmd = app.add_subcommand("ask", "Answer one question");
  ask_cmd->add_option("db", db_path, "SQLite database")->required();
  ask_cmd->add_option("question", question, "Question in natural language")->required();
  ask_cmd->add_flag("--json", as_json, "Print the full answer record as JSON");
  auto* repl_cmd = app.add_subcommand("repl", "Ask questions interactively");
  repl_cmd->add_option("db", db_path, "SQLite database")->required();
  repl_cmd->add_flag("--json", as_json, "Print full answer records as JSON");
  auto* eval_cmd = app.add_subcommand("eval", "Score a dataset by execution accuracy");
  eval_cmd->add_option("dataset", dataset, "JSON Lines dataset")->required();
  eval_cmd->add_option("--report", report_path, "Where to write the JSON report")->required();
  eval_cmd->add_option("--workers", workers, "Concurrent questions")->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--strict", strict, "Exit 2 when any case mismatches");
  for (auto* sub : {catalog_cmd, ask_cmd, repl_cmd, eval_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << app.help() << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (catalog_cmd->parsed()) return run_catalog(db_path, f, out, err);

    const auto config = resolve_config(f, o);
    auto gateway = make_gateway(f);
    Pipeline pipeline(config, *gateway);

    if (ask_cmd->parsed()) {
      return print_answer(pipeline.run_question(question, db_path), as_json, out, err);
    }

    if (repl_cmd->parsed()) {
      std::string line;
      while (true) {
        out << "nl2sql> " << std::flush;
        if (!std::getline(in, line)) break;
        const auto text = trim(line);
        if (text.empty()) continue;
        if (text == "quit" || text == "exit") break;
        if (print_answer(pipeline.run_question(text, db_path), as_json, out, err) != 0) return 1;
      }
      out << '\n';
      return 0;
    }

    const auto cases = load_dataset(dataset);
    std::atomic<bool> gateway_failed{false};
    const Predictor predictor = [&](const EvalCase& c) {
      try {
        return pipeline.predict(c);
      } catch (const Error& e) {
        if (is_gateway_error(e.code())) gateway_failed = true;
        throw;
      }
    };
    EvalOptions options;
    options.workers = workers;
    options.executor = config.executor;
    const auto report = evaluate(cases, predictor, options);
    {
      std::ofstream file(report_path, std::ios::binary | std::ios::trunc);
      if (!file) throw Error(ErrorCode::Io, "cannot write report: " + report_path);
      file << dump_json(report.to_json()) << '\n';
    }
    out << report.summary_table();
    for (const auto& c : report.cases) {
      if (!c.match) out << "mismatch " << c.eval_case.id << ": " << c.reason << '\n';
    }
    if (gateway_failed) {
      err << "error: model gateway failures; see the report for the affected cases\n";
      return 1;
    }
    if (strict && report.matches() != report.cases.size()) return 2;
    return 0;
  } catch (const Error& e) {
    print_error(err, e);
    return 1;
  }
}

}  // namespace nl2sql
