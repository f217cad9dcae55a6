#include <gtest/gtest.h>

#include "nl2sql/sql_generator.hpp"
#include "test_support.hpp"

using namespace nl2sql;
using namespace nl2sql::testing;

namespace {

DatabaseCatalog toy_catalog(const TempDir& dir) {
  const auto db = make_db(dir / "toy.db", kToyScript);
  return build_catalog(db);
}

}  // namespace

TEST(GenerationPrompt, OrderIsInstructionSchemaQuestion) {
  TempDir dir;
  const auto catalog = toy_catalog(dir);
  const auto prompt = build_generation_prompt("How fast is road 5?", catalog, nullptr).render();
  const auto i = prompt.find("Create SQL code");
  const auto s = prompt.find("Table road_status");
  const auto q = prompt.find("How fast is road 5?");
  ASSERT_NE(i, std::string::npos);
  ASSERT_NE(s, std::string::npos);
  ASSERT_NE(q, std::string::npos);
  EXPECT_LT(i, s);
  EXPECT_LT(s, q);
}

TEST(GenerationPrompt, LinkedTableOnly) {
  TempDir dir;
  const auto catalog = toy_catalog(dir);
  const SchemaLinks links(std::vector<ColumnRef>{{"road_status", "speed"}});
  const auto prompt = build_generation_prompt("q?", catalog, &links).render();
  EXPECT_NE(prompt.find("Table road_status"), std::string::npos);
  EXPECT_EQ(prompt.find("districts"), std::string::npos);
  EXPECT_NE(prompt.find("  - record_time (ValueType: TEXT; Meaning: ; Sampling: 2023/10/10)"),
            std::string::npos)
      << prompt;
}

TEST(GenerationPrompt, EmptyLinksMeanAllTables) {
  TempDir dir;
  const auto catalog = toy_catalog(dir);
  const SchemaLinks none;
  for (const SchemaLinks* links : {static_cast<const SchemaLinks*>(nullptr), &none}) {
    const auto prompt = build_generation_prompt("q?", catalog, links).render();
    EXPECT_NE(prompt.find("Table road_status"), std::string::npos);
    EXPECT_NE(prompt.find("Table districts"), std::string::npos);
  }
}

TEST(GenerationPrompt, MissingPartIsPreconditionViolation) {
  GenerationPrompt p{"do it", "", "q"};
  try {
    p.render();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PreconditionViolated);
  }
}

TEST(GenerationPrompt, TemplateOutOfOrderIsRejected) {
  TempDir dir;
  write_file(dir / "generate.txt", "{question}\n{schema_block}\n{instruction}");
  const auto lib = PromptLibrary::from_directory(dir.path());
  EXPECT_THROW((GenerationPrompt{"i", "s", "q"}.render(lib)), Error);
}

TEST(GenerateSql, ExtractsFromFencedReply) {
  ScriptedClient client({"```sql\nSELECT speed FROM road_status;\n```"});
  Model model(client, {});
  const auto c = generate_sql({"i", "s", "q"}, model);
  EXPECT_EQ(c.sql_text, "SELECT speed FROM road_status");
  EXPECT_EQ(c.attempt_index, 0);
  EXPECT_EQ(c.origin, CandidateOrigin::initial);
}

TEST(ExtractSql, Variants) {
  EXPECT_EQ(extract_sql("  SELECT a FROM t  "), "SELECT a FROM t");
  EXPECT_EQ(extract_sql("```SQL\nSELECT 1\n```"), "SELECT 1");
  EXPECT_EQ(extract_sql("Here is the query: SELECT 1;"), "SELECT 1");
  EXPECT_EQ(extract_sql("Sure.\n```\nSELECT a FROM t WHERE b = ';'; DROP TABLE t;\n```"),
            "SELECT a FROM t WHERE b = ';'");
  EXPECT_EQ(extract_sql("We select rows.\nSELECT a\nFROM t\n\nThis returns a."),
            "SELECT a\nFROM t");
  EXPECT_EQ(extract_sql("Use this:\nWITH x AS (SELECT 1) SELECT * FROM x;"),
            "WITH x AS (SELECT 1) SELECT * FROM x");
  EXPECT_EQ(extract_sql("```sql\nSELECT 1\n``` and then ```sql\nSELECT 2\n```"), "SELECT 1");
}

TEST(ExtractSql, NoSqlFound) {
  for (const char* reply : {"I cannot answer", "", "Start with a filter"}) {
    try {
      extract_sql(reply);
      FAIL() << reply;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NoSqlFound) << reply;
    }
  }
}

TEST(ExtractCode, KeepsScriptBody) {
  EXPECT_EQ(extract_code("```python\nimport pandas as pd\nprint(1)\n```\nDone."),
            "import pandas as pd\nprint(1)");
  EXPECT_EQ(extract_code("print(1)"), "print(1)");
  EXPECT_THROW(extract_code("  "), Error);
}
