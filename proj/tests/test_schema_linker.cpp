#include <gtest/gtest.h>

#include "nl2sql/schema_linker.hpp"
#include "test_support.hpp"

using namespace nl2sql;
using namespace nl2sql::testing;

namespace {

class LinkerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto db = make_db(dir_ / "toy.db", kToyScript);
    catalog_ = std::make_unique<DatabaseCatalog>(build_catalog(db));
  }
  TempDir dir_;
  std::unique_ptr<DatabaseCatalog> catalog_;
};

}  // namespace

TEST(ExplainPrompt, CarriesFourInstructionsSchemaAndQuestion) {
  const auto prompt = build_explain_prompt("How fast is road 5?", "Table t, Columns=[a];");
  for (const auto* sentence :
       {"Describe what information dimensions are included in this query.",
        "Identify which tables are related to this query.",
        "List all the columns in the identified tables and explain the meaning of each column.",
        "Locate the relevant columns from all the listed columns to the query."}) {
    EXPECT_NE(prompt.find(sentence), std::string::npos) << sentence;
  }
  EXPECT_NE(prompt.find("Table t, Columns=[a];"), std::string::npos);
  EXPECT_NE(prompt.find("How fast is road 5?"), std::string::npos);
}

TEST_F(LinkerTest, ExplainReturnsReasoning) {
  ScriptedClient client({"1. speed of one road\n2. road_status\n..."});
  Model model(client, {});
  const auto r = explain("How fast is road 5?", render_compact(*catalog_), model);
  EXPECT_FALSE(r.text.empty());
  EXPECT_NE(client.last_prompt().find("Table road_status, Columns=[road_id, speed, record_time];"),
            std::string::npos);
}

TEST(Explain, EmptySchemaFailsBeforeAnyCall) {
  ScriptedClient client;
  Model model(client, {});
  try {
    explain("q", "  ", model);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PreconditionViolated);
  }
  EXPECT_TRUE(client.requests.empty());
}

TEST(Explain, EmptyReplyIsMalformed) {
  ScriptedClient client({" \n"});
  Model model(client, {});
  EXPECT_THROW(explain("q", "Table t, Columns=[a];", model), Error);
}

TEST(Squeeze, SendsOnlyTheExplanation) {
  ScriptedClient client({"[road_status.speed]"});
  Model model(client, {});
  const auto out = squeeze("the query needs road_status.speed", model);
  EXPECT_NE(out.find("[road_status.speed]"), std::string::npos);
  EXPECT_NE(client.last_prompt().find("the query needs road_status.speed"), std::string::npos);
  EXPECT_EQ(client.last_prompt(), build_squeeze_prompt("the query needs road_status.speed"));
}

TEST(ParseLinks, BracketedFormat) {
  const auto links = parse_links("[Table1.column3, Table2.column1]");
  ASSERT_EQ(links.size(), 2u);
  EXPECT_EQ(links.links()[0], (ColumnRef{"Table1", "column3"}));
  EXPECT_EQ(links.links()[1], (ColumnRef{"Table2", "column1"}));
}

TEST(ParseLinks, ToleratesProseAndWhitespace) {
  const auto links = parse_links("Answer: [ t.a , t.b ] thanks");
  ASSERT_EQ(links.size(), 2u);
  EXPECT_EQ(links.links()[0], (ColumnRef{"t", "a"}));
  EXPECT_EQ(links.links()[1], (ColumnRef{"t", "b"}));
}

TEST(ParseLinks, EmptyListAndQuotes) {
  EXPECT_TRUE(parse_links("[]").empty());
  const auto links = parse_links(R"(["t.a", 'u.b', `v`.`c`])");
  ASSERT_EQ(links.size(), 3u);
  EXPECT_EQ(links.links()[2], (ColumnRef{"v", "c"}));
}

TEST(ParseLinks, NoBracketsIsNoListFound) {
  try {
    parse_links("no brackets here");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoListFound);
  }
}

TEST(ParseLinks, BadEntriesSkippedOrRejected) {
  Warnings warnings;
  const auto links = parse_links("[t.a, justcolumn, a.b.c, .x, t.]", ParseMode::lenient, &warnings);
  EXPECT_EQ(links.size(), 1u);
  EXPECT_EQ(warnings.size(), 4u);
  EXPECT_THROW(parse_links("[t.a, justcolumn]", ParseMode::strict), Error);
  EXPECT_THROW(parse_links("Answer: [t.a]", ParseMode::strict), Error);
  EXPECT_EQ(parse_links("[t.a]", ParseMode::strict).size(), 1u);
}

TEST(ParseLinks, DuplicatesCollapse) {
  EXPECT_EQ(parse_links("[t.a, T.A, t.a]").size(), 1u);
}

TEST_F(LinkerTest, ValidateKeepsCanonicalAndDropsGhosts) {
  Warnings warnings;
  const SchemaLinks raw({{"road_status", "speed"}, {"ghost_table", "x"}, {"Road_Status", "SPEED"},
                         {"districts", "NAME"}});
  const auto links = validate_links(raw, *catalog_, &warnings);
  ASSERT_EQ(links.size(), 2u);
  EXPECT_EQ(links.links()[0], (ColumnRef{"road_status", "speed"}));
  EXPECT_EQ(links.links()[1], (ColumnRef{"districts", "name"}));
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("ghost_table.x"), std::string::npos);
}

TEST_F(LinkerTest, LinkSchemaEndToEnd) {
  ScriptedClient client({"road_status holds speed", "[road_status.speed, road_status.road_id]"});
  Model model(client, {});
  const auto r = link_schema("How fast is road 5?", *catalog_, model);
  EXPECT_EQ(r.links.size(), 2u);
  EXPECT_FALSE(r.fell_back_to_all_tables);
  EXPECT_EQ(r.links.tables(), std::vector<std::string>{"road_status"});
}

TEST_F(LinkerTest, LinkSchemaFallsBackWhenNothingSurvives) {
  ScriptedClient client({"nothing useful", "I could not decide"});
  Model model(client, {});
  const auto r = link_schema("q", *catalog_, model);
  EXPECT_TRUE(r.links.empty());
  EXPECT_TRUE(r.fell_back_to_all_tables);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(SchemaLinks, FormatAndTables) {
  SchemaLinks links({{"t", "a"}, {"u", "b"}, {"t", "c"}});
  EXPECT_EQ(links.format(), "[t.a, u.b, t.c]");
  EXPECT_EQ(links.tables(), (std::vector<std::string>{"t", "u"}));
}
