#include <gtest/gtest.h>

#include "nl2sql/query_rewriter.hpp"
#include "test_support.hpp"

using namespace nl2sql;
using namespace nl2sql::testing;

namespace {

RewriteContext fixed_context() {
  RewriteContext ctx;
  ctx.current_timestamp = parse_timestamp("2023-10-10 08:00");
  return ctx;
}

Model model_for(ScriptedClient& client) { return Model(client, LlmSettings{}); }

}  // namespace

TEST(Timestamp, FormatsAndParses) {
  const auto ts = parse_timestamp("2023-10-10 08:00");
  EXPECT_EQ(format_timestamp(ts), "2023-10-10 08:00");
  EXPECT_EQ(format_timestamp(parse_timestamp("2023-10-10T08:05:59")), "2023-10-10 08:05");
  EXPECT_THROW(parse_timestamp("10/10/2023"), Error);
  EXPECT_THROW(parse_timestamp("2023-02-30 08:00"), Error);
  EXPECT_THROW(parse_timestamp("2023-10-10 -1:00"), Error);
}

TEST(Timestamp, UnrenderableClockIsMissingContext) {
  const Timestamp far{std::chrono::sys_days{std::chrono::year{12000} / 1 / 1}};
  try {
    format_timestamp(far);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingContext);
  }
}

TEST(ContainsToken, RespectsWordBoundaries) {
  EXPECT_TRUE(contains_token("road 5 now?", "now"));
  EXPECT_FALSE(contains_token("what is known", "now"));
  EXPECT_FALSE(contains_token("nowhere", "now"));
  EXPECT_TRUE(contains_token("just now, please", "just now"));
}

TEST(ExtractVagueTerms, FindsNow) {
  ScriptedClient client({R"([{"term": "now", "category": "temporal"}])"});
  auto model = model_for(client);
  const auto terms = extract_vague_terms("How congested is road 5 now?", fixed_context(), model);
  ASSERT_EQ(terms.size(), 1u);
  EXPECT_EQ(terms[0], (VagueTerm{"now", TermCategory::temporal}));
  const auto& prompt = client.last_prompt();
  EXPECT_NE(prompt.find("How congested is road 5 now?"), std::string::npos);
  EXPECT_NE(prompt.find("2023-10-10 08:00"), std::string::npos);
}

TEST(ExtractVagueTerms, ExplicitQuestionYieldsNothing) {
  ScriptedClient client({"[]"});
  auto model = model_for(client);
  EXPECT_TRUE(extract_vague_terms("SELECT-style question between 2023-10-10 07:00 and 08:00",
                                  fixed_context(), model)
                  .empty());
}

TEST(ExtractVagueTerms, DropsTermsAbsentFromQuestion) {
  ScriptedClient client({R"(Sure: [{"term": "yesterday", "category": "temporal"}, "now"])"});
  auto model = model_for(client);
  Warnings warnings;
  const auto terms =
      extract_vague_terms("What is the speed on road 5?", fixed_context(), model, {}, &warnings);
  EXPECT_TRUE(terms.empty());
  EXPECT_EQ(warnings.size(), 2u);
}

TEST(ExtractVagueTerms, MalformedReplyWarnsAndReturnsEmpty) {
  ScriptedClient client({"there are some vague terms"});
  auto model = model_for(client);
  Warnings warnings;
  EXPECT_TRUE(extract_vague_terms("road 5 now?", fixed_context(), model, {}, &warnings).empty());
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(ExtractVagueTerms, EmptyQuestionIsPreconditionViolation) {
  ScriptedClient client;
  auto model = model_for(client);
  try {
    extract_vague_terms("  ", fixed_context(), model);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PreconditionViolated);
  }
  EXPECT_TRUE(client.requests.empty());
}

TEST(TransformTerms, NowUsesClockWithoutLlm) {
  ScriptedClient client;
  auto model = model_for(client);
  const auto mapping = transform_terms({{"now", TermCategory::temporal}}, "road 5 now?",
                                       fixed_context(), model);
  EXPECT_EQ(mapping.at("now"), "2023-10-10 08:00");
  EXPECT_TRUE(client.requests.empty());
}

TEST(TransformTerms, JustNowUsesRecentWindow) {
  ScriptedClient client;
  auto model = model_for(client);
  const auto mapping = transform_terms({{"just now", TermCategory::temporal}},
                                       "busy just now?", fixed_context(), model);
  EXPECT_EQ(mapping.at("just now"), "between 2023-10-10 07:45 and 2023-10-10 08:00");

  RewriteOptions options;
  options.recent_window = std::chrono::minutes(30);
  const auto wide = transform_terms({{"recently", TermCategory::temporal}}, "recently?",
                                    fixed_context(), model, options);
  EXPECT_EQ(wide.at("recently"), "between 2023-10-10 07:30 and 2023-10-10 08:00");
}

TEST(TransformTerms, TodayAndYesterdayAreDates) {
  ScriptedClient client;
  auto model = model_for(client);
  const auto mapping = transform_terms(
      {{"today", TermCategory::temporal}, {"yesterday", TermCategory::temporal}}, "",
      fixed_context(), model);
  EXPECT_EQ(mapping.at("today"), "2023-10-10");
  EXPECT_EQ(mapping.at("yesterday"), "2023-10-09");
}

TEST(TransformTerms, GlossaryBypassesLlm) {
  ScriptedClient client;
  auto model = model_for(client);
  auto ctx = fixed_context();
  ctx.glossary["peak hours"] = "07:00-09:00 and 17:00-19:00";
  const auto mapping = transform_terms({{"Peak Hours", TermCategory::domain}},
                                       "speed in Peak Hours", ctx, model);
  EXPECT_EQ(mapping.at("Peak Hours"), "07:00-09:00 and 17:00-19:00");
  EXPECT_TRUE(client.requests.empty());
}

TEST(TransformTerms, OtherTermsAskTheModel) {
  ScriptedClient client({"\n\"severity of at least 4\"\nextra line"});
  auto model = model_for(client);
  const auto mapping = transform_terms({{"severe", TermCategory::domain}}, "severe incidents",
                                       fixed_context(), model);
  EXPECT_EQ(mapping.at("severe"), "severity of at least 4");
  EXPECT_NE(client.last_prompt().find("\"severe\""), std::string::npos);
}

TEST(TransformTerms, EmptyReplyIsMalformed) {
  ScriptedClient client({"   \n"});
  auto model = model_for(client);
  try {
    transform_terms({{"nearby", TermCategory::spatial}}, "roads nearby", fixed_context(), model);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedLlmOutput);
  }
}

TEST(ReplaceTerms, SubstitutesAndKeepsRest) {
  EXPECT_EQ(replace_terms("How congested is road 5 now?", {{"now", "2023-10-10 08:00"}}),
            "How congested is road 5 2023-10-10 08:00?");
  EXPECT_EQ(replace_terms("unchanged question", {}), "unchanged question");
}

TEST(ReplaceTerms, LongestKeyFirst) {
  EXPECT_EQ(replace_terms("busy just now, and now?", {{"now", "A"}, {"just now", "B"}}),
            "busy B, and A?");
}

TEST(ReplaceTerms, ReplacementsAreNotRescanned) {
  EXPECT_EQ(replace_terms("today now", {{"now", "today"}, {"today", "2023"}}), "2023 today");
}

TEST(ReplaceTerms, MissingKeyIsKeyAbsent) {
  try {
    replace_terms("road 5", {{"now", "T"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::KeyAbsent);
  }
}

TEST(Rewrite, ExplicitQuestionIsIdentity) {
  ScriptedClient client({"[]"});
  auto model = model_for(client);
  const auto result = rewrite("What is the speed on road 5 at 2023-10-10 08:00?", fixed_context(),
                              model);
  EXPECT_TRUE(result.is_identity());
  EXPECT_EQ(client.requests.size(), 1u);
}

TEST(Rewrite, NowQuestionGetsTimestamp) {
  ScriptedClient client({R"([{"term": "now", "category": "temporal"}])"});
  auto model = model_for(client);
  const auto result = rewrite("How congested is road 5 now?", fixed_context(), model);
  EXPECT_EQ(result.rewritten, "How congested is road 5 2023-10-10 08:00?");
  EXPECT_EQ(result.mapping.at("now"), "2023-10-10 08:00");
  EXPECT_FALSE(result.is_identity());
}

TEST(Rewrite, MalformedOutputDegradesToIdentity) {
  ScriptedClient client({"I think \"now\" is vague"});
  auto model = model_for(client);
  const auto result = rewrite("How congested is road 5 now?", fixed_context(), model);
  EXPECT_TRUE(result.is_identity());
  EXPECT_FALSE(result.warnings.empty());

  ScriptedClient empty_transform({R"([{"term": "nearby", "category": "spatial"}])", ""});
  auto model2 = model_for(empty_transform);
  const auto degraded = rewrite("roads nearby", fixed_context(), model2);
  EXPECT_EQ(degraded.rewritten, "roads nearby");
  EXPECT_FALSE(degraded.warnings.empty());
}

TEST(Rewrite, LlmReplaceModeUsesModelReply) {
  ScriptedClient client({R"(["now"])", "How congested is road 5 at 2023-10-10 08:00?"});
  auto model = model_for(client);
  RewriteOptions options;
  options.replace_mode = ReplaceMode::llm;
  const auto result = rewrite("How congested is road 5 now?", fixed_context(), model, options);
  EXPECT_EQ(result.rewritten, "How congested is road 5 at 2023-10-10 08:00?");
  EXPECT_NE(client.last_prompt().find("\"now\" -> \"2023-10-10 08:00\""), std::string::npos)
      << client.last_prompt();
}

TEST(Glossary, LoadsJsonObject) {
  TempDir dir;
  write_file(dir / "g.json", R"({"peak hours": "07:00-09:00"})");
  EXPECT_EQ(load_glossary(dir / "g.json").at("peak hours"), "07:00-09:00");
  write_file(dir / "bad.json", R"({"x": 1})");
  EXPECT_THROW(load_glossary(dir / "bad.json"), Error);
}
