// Builds the demo database and authors its replay transcript.
//
//   make_demo build-db <script.sql> <out.db>
//   make_demo author <authoring.json> --db <db> --config <config.json>
//                    --transcript <out.jsonl> --dataset <out.jsonl>
//
// Authoring runs the real pipeline in record mode against a scripted
// responder, so the transcript holds exactly the requests the pipeline makes.

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nl2sql/database.hpp"
#include "nl2sql/evaluator.hpp"
#include "nl2sql/pipeline.hpp"
#include "nl2sql/sql_lexer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace nl2sql;

namespace {

struct AuthoredCase {
  std::string id;
  std::string difficulty;
  std::string question;
  std::string gold_sql;
  json extract;
  std::map<std::string, std::string> transform;
  std::string explain;
  std::string squeeze;
  std::vector<std::string> sql;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Literal text of a template before its first placeholder.
std::string literal_prefix(const std::string& text) {
  return text.substr(0, text.find('{'));
}

std::string quoted_after(const std::string& prompt, const std::string& marker) {
  const auto start = prompt.find(marker);
  if (start == std::string::npos) return {};
  const auto open = start + marker.size();
  const auto close = prompt.find('"', open);
  return prompt.substr(open, close - open);
}

std::int64_t approx_tokens(const std::string& text) {
  return static_cast<std::int64_t>(std::ceil(static_cast<double>(text.size()) / 4.0));
}

class AuthoringTransport : public Transport {
 public:
  explicit AuthoringTransport(const PromptLibrary& prompts) {
    for (const auto* name : {"rewrite_extract", "rewrite_transform", "rewrite_replace",
                             "link_explain", "link_squeeze", "repair",
                             "generate_sql_instruction"}) {
      prefixes_.emplace_back(name, literal_prefix(prompts.get(name)));
    }
  }

  void begin(const AuthoredCase& c) {
    case_ = &c;
    next_sql_ = 0;
  }
  std::size_t unused_sql() const { return case_->sql.size() - next_sql_; }

  CompletionResponse send(const CompletionRequest& request) override {
    const auto& prompt = request.messages.back().content;
    const auto reply = respond(kind_of(prompt), prompt);
    return {reply, TokenUsage{approx_tokens(prompt), approx_tokens(reply)}};
  }

 private:
  std::string kind_of(const std::string& prompt) const {
    for (const auto& [name, prefix] : prefixes_) {
      if (!prefix.empty() && prompt.rfind(prefix, 0) == 0) return name;
    }
    throw Error(ErrorCode::Config, "authoring: unrecognised prompt:\n" + prompt.substr(0, 200));
  }

  std::string respond(const std::string& kind, const std::string& prompt) {
    const auto& c = *case_;
    if (kind == "rewrite_extract") return c.extract.dump();
    if (kind == "rewrite_transform") {
      const auto term = quoted_after(prompt, "expression \"");
      const auto it = c.transform.find(term);
      if (it == c.transform.end()) {
        throw Error(ErrorCode::Config, c.id + ": no authored transform for '" + term + "'");
      }
      return it->second;
    }
    if (kind == "link_explain") return c.explain;
    if (kind == "link_squeeze") return c.squeeze;
    if (kind == "generate_sql_instruction" || kind == "repair") {
      if (next_sql_ >= c.sql.size()) {
        throw Error(ErrorCode::Config, c.id + ": pipeline asked for more SQL than authored");
      }
      return "```sql\n" + c.sql[next_sql_++] + "\n```";
    }
    throw Error(ErrorCode::Config, c.id + ": no authored reply for " + kind);
  }

  std::vector<std::pair<std::string, std::string>> prefixes_;
  const AuthoredCase* case_ = nullptr;
  std::size_t next_sql_ = 0;
};

std::vector<AuthoredCase> load_cases(const json& doc) {
  std::vector<AuthoredCase> out;
  for (const auto& j : doc.at("cases")) {
    AuthoredCase c;
    c.id = j.at("id").get<std::string>();
    c.difficulty = j.at("difficulty").get<std::string>();
    c.question = j.at("question").get<std::string>();
    c.gold_sql = j.at("gold_sql").get<std::string>();
    c.extract = j.at("extract");
    c.transform = j.at("transform").get<std::map<std::string, std::string>>();
    c.explain = j.at("explain").get<std::string>();
    c.squeeze = j.at("squeeze").get<std::string>();
    c.sql = j.at("sql").get<std::vector<std::string>>();
    out.push_back(std::move(c));
  }
  return out;
}

int build_db(const fs::path& script, const fs::path& out) {
  fs::remove(out);
  const auto db = Database::open_readwrite(out);
  db.exec_script(read_file(script));
  return 0;
}

int author(const fs::path& authoring, const fs::path& db_path, const fs::path& config_path,
           const fs::path& transcript, const fs::path& dataset) {
  const auto doc = json::parse(read_file(authoring));
  const auto cases = load_cases(doc);
  const auto config = PipelineConfig::load(config_path);

  fs::remove(transcript);
  const PromptLibrary prompts =
      config.prompt_dir ? PromptLibrary::from_directory(*config.prompt_dir) : PromptLibrary::builtin();
  auto transport = std::make_unique<AuthoringTransport>(prompts);
  auto* responder = transport.get();
  auto gateway = Gateway::record(std::move(transport), transcript);
  Pipeline pipeline(config, *gateway);
  const auto db = Database::open_readonly(db_path);

  int failures = 0;
  std::ofstream data(dataset, std::ios::binary | std::ios::trunc);
  for (const auto& c : cases) {
    responder->begin(c);
    const auto record = pipeline.run_question(c.question, db_path, c.id);
    const auto gold = execute_readonly(c.gold_sql, db);
    std::string problem;
    if (record.error) {
      problem = record.error->stage + ": " + record.error->message;
    } else if (!record.answered()) {
      problem = "unanswered: " + record.failure_reason;
    } else if (responder->unused_sql() != 0) {
      problem = "authored SQL left unused";
    } else if (!gold.ok() || !compare_results(*record.final_outcome, gold, c.gold_sql)) {
      problem = "final result differs from gold";
    } else if (to_string(classify_difficulty(c.gold_sql)) != c.difficulty) {
      problem = "difficulty label disagrees with the gold SQL";
    }
    if (!problem.empty()) {
      std::cerr << c.id << ": " << problem << '\n';
      ++failures;
    }
    data << json{{"id", c.id},
                 {"question", c.question},
                 {"gold_sql", c.gold_sql},
                 {"db", doc.at("db").get<std::string>()},
                 {"difficulty", c.difficulty}}
                .dump()
         << '\n';
  }
  std::cout << "authored " << cases.size() << " cases, " << failures << " problems\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Demo fixture builder"};
  app.require_subcommand(1);

  std::string script, out_db;
  auto* build_cmd = app.add_subcommand("build-db", "Create the demo database from SQL");
  build_cmd->add_option("script", script)->required()->check(CLI::ExistingFile);
  build_cmd->add_option("out", out_db)->required();

  std::string authoring, db, config, transcript, dataset;
  auto* author_cmd = app.add_subcommand("author", "Record the demo transcript and dataset");
  author_cmd->add_option("authoring", authoring)->required()->check(CLI::ExistingFile);
  author_cmd->add_option("--db", db)->required()->check(CLI::ExistingFile);
  author_cmd->add_option("--config", config)->required()->check(CLI::ExistingFile);
  author_cmd->add_option("--transcript", transcript)->required();
  author_cmd->add_option("--dataset", dataset)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (build_cmd->parsed()) return build_db(script, out_db);
    return author(authoring, db, config, transcript, dataset);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
