#include <gtest/gtest.h>

#include "nl2sql/text2function.hpp"
#include "test_support.hpp"

using namespace nl2sql;
using namespace nl2sql::testing;
using json = nlohmann::json;

namespace {

class FunctionTest : public ::testing::Test {
 protected:
  void SetUp() override {
    db_ = std::make_unique<Database>(make_db(dir_ / "toy.db", kToyScript));
    catalog_ = std::make_unique<DatabaseCatalog>(build_catalog(*db_));
  }
  TempDir dir_;
  std::unique_ptr<Database> db_;
  std::unique_ptr<DatabaseCatalog> catalog_;
};

FunctionCall call_of(const char* text) { return parse_function_call(json::parse(text)); }

}  // namespace

TEST(Compile, AggregatedValue) {
  const auto call = call_of(R"j({"template": "get_aggregated_value",
      "args": {"calculation": "AVG(speed)", "table": "road_status", "condition": "road_id = 5"}})j");
  EXPECT_EQ(compile(call).sql_text, "SELECT AVG(speed) FROM road_status WHERE road_id = 5");
}

TEST(Compile, SpecificColumnsWithoutCondition) {
  const auto call = call_of(
      R"j({"template": "get_specific_columns", "args": {"columns": ["name"], "table": "districts"}})j");
  EXPECT_EQ(compile(call).sql_text, "SELECT name FROM districts");
}

TEST(Compile, SortedValues) {
  const auto call = call_of(R"j({"template": "get_sorted_values_based_on_condition",
      "args": {"values": ["speed"], "table": "road_status", "condition": "speed > 0",
               "order_by": "speed DESC", "limit": 3}})j");
  EXPECT_EQ(compile(call).sql_text,
            "SELECT speed FROM road_status WHERE speed > 0 ORDER BY speed DESC LIMIT 3");
}

TEST(Compile, DistinctGrouped) {
  auto call = call_of(R"j({"template": "get_distinct_grouped",
      "args": {"columns": ["road_id"], "table": "road_status"}})j");
  EXPECT_EQ(compile(call).sql_text, "SELECT DISTINCT road_id FROM road_status");
  call = call_of(R"j({"template": "get_distinct_grouped",
      "args": {"columns": ["road_id", "COUNT(*)"], "table": "road_status",
               "condition": "speed > 10", "group_by": ["road_id"]}})j");
  EXPECT_EQ(compile(call).sql_text,
            "SELECT road_id, COUNT(*) FROM road_status WHERE speed > 10 GROUP BY road_id");
}

TEST(ParseCall, RejectsUnknownTemplateAndArguments) {
  for (const char* bad : {
           R"j({"template": "get_everything", "args": {"table": "t"}})j",
           R"j({"template": "get_aggregated_value", "args": {"calculation": "1", "table": "t", "limit": 3}})j",
           R"j({"template": "get_specific_columns", "args": {"table": "t"}})j",
           R"j({"template": "get_sorted_values_based_on_condition",
               "args": {"values": ["a"], "table": "t", "order_by": "a", "limit": 0}})j",
           R"j({"args": {}})j",
           R"j([1, 2])j",
       }) {
    try {
      parse_function_call(json::parse(bad));
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedCall) << bad;
    }
  }
}

TEST(ParseCall, RoundTripsThroughJson) {
  const auto call = call_of(R"j({"template": "get_sorted_values_based_on_condition",
      "args": {"values": "speed", "table": "road_status", "order_by": ["speed DESC", "road_id"],
               "limit": "2"}})j");
  EXPECT_EQ(call.values, std::vector<std::string>{"speed"});
  EXPECT_EQ(call.order_by, "speed DESC, road_id");
  EXPECT_EQ(call.limit, 2);
  EXPECT_EQ(parse_function_call(call.to_json()), call);
}

TEST(ParseReply, FindsObjectInProse) {
  const auto call = parse_function_reply(
      "I will call:\n```json\n{\"template\": \"get_aggregated_value\", \"args\": "
      "{\"calculation\": \"MAX(speed)\", \"table\": \"road_status\"}}\n```");
  EXPECT_EQ(call.function, FunctionTemplate::get_aggregated_value);
  EXPECT_THROW(parse_function_reply("no call"), Error);
  EXPECT_THROW(parse_function_reply("{not json}"), Error);
}

TEST_F(FunctionTest, PromptListsAllFourSignatures) {
  const auto prompt = build_function_prompt("Average speed?", *catalog_);
  for (auto t : kAllFunctionTemplates) {
    EXPECT_NE(prompt.find(signature(t)), std::string::npos) << signature(t);
  }
  EXPECT_NE(prompt.find("get_specific_columns(columns, table, condition)"), std::string::npos);
  EXPECT_NE(prompt.find(
                "get_sorted_values_based_on_condition(values, table, condition, order_by, limit)"),
            std::string::npos);
  EXPECT_NE(prompt.find("get_aggregated_value(calculation, table, condition)"), std::string::npos);
  EXPECT_NE(prompt.find("get_distinct_grouped(columns, table, condition, group_by)"),
            std::string::npos);
  EXPECT_NE(prompt.find("Average speed?"), std::string::npos);
  EXPECT_NE(prompt.find("Table road_status"), std::string::npos);
}

TEST_F(FunctionTest, SelectAndFillAggregation) {
  ScriptedClient client({R"j({"template": "get_aggregated_value",
      "args": {"calculation": "AVG(speed)", "table": "road_status", "condition": "road_id = 5"}})j"});
  Model model(client, {});
  const auto call = select_and_fill("What is the average speed on road 5?", *catalog_, model);
  EXPECT_EQ(call.function, FunctionTemplate::get_aggregated_value);
  EXPECT_TRUE(validate_call(call, *catalog_, db_.get()).ok());
}

TEST_F(FunctionTest, SelectAndFillFifthTemplate) {
  ScriptedClient client({R"j({"template": "get_fifth_thing", "args": {}})j"});
  Model model(client, {});
  try {
    select_and_fill("q", *catalog_, model);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedCall);
  }
}

TEST_F(FunctionTest, ValidateAcceptsKnownColumns) {
  const auto call = call_of(R"j({"template": "get_specific_columns",
      "args": {"columns": ["speed", "record_time"], "table": "road_status", "condition": "road_id = 5"}})j");
  EXPECT_TRUE(validate_call(call, *catalog_, db_.get()).ok());
}

TEST_F(FunctionTest, ValidateFlagsUnknownTable) {
  const auto call = call_of(
      R"j({"template": "get_specific_columns", "args": {"columns": ["x"], "table": "ghost"}})j");
  const auto v = validate_call(call, *catalog_, db_.get());
  ASSERT_EQ(v.issues.size(), 1u);
  EXPECT_EQ(v.issues[0].kind, IssueKind::UnknownTable);
  EXPECT_EQ(v.issues[0].offender, "ghost");
}

TEST_F(FunctionTest, ValidateFlagsUnknownColumn) {
  const auto call = call_of(
      R"j({"template": "get_specific_columns", "args": {"columns": ["spd"], "table": "road_status"}})j");
  const auto v = validate_call(call, *catalog_);
  ASSERT_EQ(v.issues.size(), 1u);
  EXPECT_EQ(v.issues[0].kind, IssueKind::UnknownColumn);
  EXPECT_EQ(v.issues[0].offender, "spd");
}

TEST_F(FunctionTest, ValidateFindsUnknownColumnsInsideExpressions) {
  const auto call = call_of(R"j({"template": "get_aggregated_value",
      "args": {"calculation": "AVG(spd)", "table": "road_status", "condition": "road_id = 5"}})j");
  const auto v = validate_call(call, *catalog_, db_.get());
  ASSERT_EQ(v.issues.size(), 1u);
  EXPECT_EQ(v.issues[0].kind, IssueKind::UnknownColumn);
  EXPECT_EQ(v.issues[0].offender, "spd");

  const auto order = call_of(R"j({"template": "get_sorted_values_based_on_condition",
      "args": {"values": ["speed"], "table": "road_status", "order_by": "spd DESC"}})j");
  const auto ov = validate_call(order, *catalog_);
  ASSERT_EQ(ov.issues.size(), 1u);
  EXPECT_EQ(ov.issues[0].offender, "spd");
}

TEST_F(FunctionTest, ValidateRejectsInjectedStatements) {
  const auto call = call_of(R"j({"template": "get_specific_columns",
      "args": {"columns": ["speed"], "table": "road_status", "condition": "1 = 1; DROP TABLE road_status"}})j");
  const auto v = validate_call(call, *catalog_, db_.get());
  ASSERT_FALSE(v.ok());
  EXPECT_EQ(v.issues[0].kind, IssueKind::InvalidExpression);
  EXPECT_FALSE(v.describe().empty());
}
