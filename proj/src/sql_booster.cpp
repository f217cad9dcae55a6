#include "nl2sql/sql_booster.hpp"

#include "nl2sql/errors.hpp"

namespace nl2sql {

std::string_view to_string(Termination termination) {
  return termination == Termination::success_nonempty ? "success_nonempty"
                                                      : "max_attempts_exhausted";
}

std::string build_repair_prompt(const SqlCandidate& previous, const ExecutionOutcome& outcome,
                                std::string_view schema_block, std::string_view question,
                                std::string_view language, const PromptLibrary& prompts) {
  std::string feedback;
  if (outcome.ok()) {
    if (!is_empty(outcome)) {
      throw Error(ErrorCode::PreconditionViolated,
                  "repair prompt requested for a successful non-empty result");
    }
    feedback = std::string(kEmptyResultNotice);
  } else {
    feedback = "Error message: " + outcome.error_message.value_or("unknown error");
  }
  return prompts.render("repair", {{"previous_sql", previous.sql_text},
                                   {"status", std::string(to_string(outcome.status))},
                                   {"error_message_or_empty_notice", feedback},
                                   {"schema_block", std::string(schema_block)},
                                   {"question", question.empty() ? "(not provided)" : std::string(question)},
                                   {"language", std::string(language)}});
}

BoostTrace boost(const SqlCandidate& initial, ExecutionEnvironment& env,
                 const RepairContext& context, Model& model, int max_attempts,
                 const PromptLibrary& prompts) {
  if (max_attempts < 1) {
    throw Error(ErrorCode::PreconditionViolated, "max_attempts must be at least 1");
  }
  BoostTrace trace;
  SqlCandidate candidate = initial;
  candidate.attempt_index = 0;

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    auto outcome = env.execute(candidate.sql_text);
    const bool done = outcome.ok() && !is_empty(outcome);
    trace.attempts.push_back({candidate, std::move(outcome)});
    if (done) {
      trace.termination = Termination::success_nonempty;
      trace.final = candidate;
      return trace;
    }
    if (attempt + 1 == max_attempts) break;

    try {
      const auto prompt = build_repair_prompt(candidate, trace.attempts.back().outcome,
                                              context.schema_block, context.question,
                                              env.language(), prompts);
      const auto reply = model.ask(prompt);
      candidate = SqlCandidate{env.extract(reply.text), attempt + 1, CandidateOrigin::boosted};
    } catch (const Error& e) {
      trace.error_note = std::string(to_string(e.code())) + ": " + e.what();
      trace.error_code = e.code();
      break;
    }
  }
  trace.termination = Termination::max_attempts_exhausted;
  trace.final = trace.attempts.back().candidate;
  return trace;
}

BoostTrace boost(const SqlCandidate& initial, const Database& db, const DatabaseCatalog& catalog,
                 Model& model, int max_attempts) {
  SqlEnvironment env(db);
  return boost(initial, env, RepairContext{{}, render_enriched(catalog)}, model, max_attempts);
}

}  // namespace nl2sql
