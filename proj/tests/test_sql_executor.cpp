#include <gtest/gtest.h>

#include "nl2sql/sql_executor.hpp"
#include "test_support.hpp"

using namespace nl2sql;
using namespace nl2sql::testing;

namespace {

std::string guard_error(std::string_view sql) {
  try {
    guard_statement(sql);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ForbiddenStatement);
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Guard, AcceptsReads) {
  for (const char* ok : {"SELECT 1", "select 1;", "WITH x AS (SELECT 1) SELECT * FROM x",
                         "SELECT replace(name, 'a', 'b') FROM t", "SELECT 'DROP TABLE t'",
                         "SELECT \"delete\" FROM t", "SELECT 1 -- DROP TABLE t"}) {
    EXPECT_EQ(guard_error(ok), "") << ok;
  }
}

TEST(Guard, RejectsWritesAndBatches) {
  EXPECT_EQ(guard_error("DROP TABLE t"), "DROP");
  EXPECT_EQ(guard_error("SELECT 1; SELECT 2"), "multiple statements");
  EXPECT_EQ(guard_error("INSERT INTO t VALUES (1)"), "INSERT");
  EXPECT_EQ(guard_error("PRAGMA writable_schema = 1"), "PRAGMA");
  EXPECT_EQ(guard_error("WITH x AS (SELECT 1) DELETE FROM t"), "DELETE");
  EXPECT_EQ(guard_error("ATTACH 'x.db' AS x"), "ATTACH");
  EXPECT_EQ(guard_error(""), "empty statement");
  EXPECT_NE(guard_error("SELECT 'open"), "");
}

class ExecutorTest : public ::testing::Test {
 protected:
  void SetUp() override { db_ = std::make_unique<Database>(make_db(dir_ / "toy.db", kToyScript)); }
  TempDir dir_;
  std::unique_ptr<Database> db_;
};

TEST_F(ExecutorTest, SelectOne) {
  const auto out = execute_readonly("SELECT 1", *db_);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.columns, std::vector<std::string>{"1"});
  ASSERT_EQ(out.rows.size(), 1u);
  EXPECT_EQ(out.rows[0][0], Value{std::int64_t{1}});
  EXPECT_FALSE(out.truncated);
}

TEST_F(ExecutorTest, UnknownColumnIsNamed) {
  const auto out = execute_readonly("SELECT nonexistent FROM road_status", *db_);
  EXPECT_FALSE(out.ok());
  ASSERT_TRUE(out.error_message);
  EXPECT_NE(out.error_message->find("nonexistent"), std::string::npos);
}

TEST_F(ExecutorTest, MissingKeyGivesZeroRows) {
  const auto out = execute_readonly("SELECT speed FROM road_status WHERE road_id = 999", *db_);
  ASSERT_TRUE(out.ok());
  EXPECT_TRUE(out.rows.empty());
  EXPECT_TRUE(is_empty(out));
}

TEST_F(ExecutorTest, ValueTypesSurvive) {
  const auto out = execute_readonly(
      "SELECT road_id, speed, record_time, NULL FROM road_status ORDER BY road_id LIMIT 1", *db_);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.rows[0][0], Value{std::int64_t{5}});
  EXPECT_EQ(out.rows[0][1], Value{42.5});
  EXPECT_EQ(out.rows[0][2], Value{std::string("2023/10/10")});
  EXPECT_TRUE(is_null(out.rows[0][3]));
}

TEST_F(ExecutorTest, ForbiddenStatementBecomesFailOutcome) {
  const auto out = execute_readonly("DELETE FROM road_status", *db_);
  EXPECT_FALSE(out.ok());
  EXPECT_NE(out.error_message->find("DELETE"), std::string::npos);
  EXPECT_EQ(execute_readonly("SELECT COUNT(*) FROM road_status", *db_).rows[0][0],
            Value{std::int64_t{4}});
}

TEST_F(ExecutorTest, RowCapTruncates) {
  ExecutorOptions options;
  options.row_cap = 2;
  const auto out = execute_readonly("SELECT * FROM road_status", *db_, options);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(out.rows.size(), 2u);
  EXPECT_TRUE(out.truncated);
}

TEST_F(ExecutorTest, TimeoutStopsRunawayQuery) {
  ExecutorOptions options;
  options.timeout = std::chrono::milliseconds(100);
  const auto started = std::chrono::steady_clock::now();
  const auto out = execute_readonly(
      "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT COUNT(*) FROM c",
      *db_, options);
  const auto took = std::chrono::steady_clock::now() - started;
  EXPECT_FALSE(out.ok());
  EXPECT_NE(out.error_message->find("timed out"), std::string::npos);
  EXPECT_LT(took, std::chrono::seconds(5));
  // The connection stays usable afterwards.
  EXPECT_TRUE(execute_readonly("SELECT 1", *db_).ok());
}

TEST_F(ExecutorTest, ReadOnlyConnectionRejectsWritesAtEngineLevel) {
  EXPECT_THROW(db_->exec_script("DELETE FROM road_status"), Error);
}

TEST(IsEmpty, Conventions) {
  ExecutionOutcome out;
  out.status = ExecStatus::success;
  EXPECT_TRUE(is_empty(out));
  out.rows = {{Value{}}};
  EXPECT_TRUE(is_empty(out));
  out.rows = {{Value{3.5}}};
  EXPECT_FALSE(is_empty(out));
  out.rows = {{Value{}}, {Value{}}};
  EXPECT_FALSE(is_empty(out));
  try {
    is_empty(ExecutionOutcome::failure("boom"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidOnFailure);
  }
}

TEST(ExecutionOutcome, FailureAlwaysHasMessage) {
  EXPECT_EQ(ExecutionOutcome::failure("").error_message, "unknown error");
}
