#include <gtest/gtest.h>
#include <sqlite3.h>

#include "nl2sql/schema_catalog.hpp"
#include "nl2sql/sql_lexer.hpp"
#include "test_support.hpp"

using namespace nl2sql;
using namespace nl2sql::testing;

namespace {

// Column count straight from the engine, bypassing the catalog code.
int engine_column_count(const fs::path& path) {
  sqlite3* db = nullptr;
  sqlite3_open_v2(path.c_str(), &db, SQLITE_OPEN_READONLY, nullptr);
  sqlite3_stmt* stmt = nullptr;
  sqlite3_prepare_v2(db,
                     "SELECT COUNT(*) FROM sqlite_master m, pragma_table_info(m.name) "
                     "WHERE m.type = 'table' AND m.name NOT LIKE 'sqlite_%'",
                     -1, &stmt, nullptr);
  sqlite3_step(stmt);
  const int n = sqlite3_column_int(stmt, 0);
  sqlite3_finalize(stmt);
  sqlite3_close(db);
  return n;
}

}  // namespace

TEST(SchemaCatalog, ToyDatabaseMatchesEngineIntrospection) {
  TempDir dir;
  const auto db = make_db(dir / "toy.db", kToyScript);
  const auto catalog = build_catalog(db);
  EXPECT_EQ(catalog.db_id(), "toy");
  ASSERT_EQ(catalog.tables().size(), 2u);
  EXPECT_EQ(catalog.tables()[0].name, "road_status");
  EXPECT_EQ(catalog.tables()[1].name, "districts");
  EXPECT_EQ(catalog.column_count(), 5u);
  EXPECT_EQ(static_cast<int>(catalog.column_count()), engine_column_count(dir / "toy.db"));
}

TEST(SchemaCatalog, DemoDatabaseMatchesEngineIntrospection) {
  const auto path = demo_build_dir() / "traffic.db";
  const auto db = Database::open_readonly(path);
  const auto catalog = build_catalog(db);
  EXPECT_EQ(static_cast<int>(catalog.column_count()), engine_column_count(path));
  EXPECT_GE(catalog.tables().size(), 3u);
  EXPECT_GE(catalog.column_count(), 20u);
}

TEST(SchemaCatalog, EmptyDatabaseHasNoTables) {
  TempDir dir;
  const auto db = make_db(dir / "empty.db", "");
  const auto catalog = build_catalog(db);
  EXPECT_TRUE(catalog.tables().empty());
  EXPECT_EQ(render_compact(catalog), "");
}

TEST(SchemaCatalog, SampleIsFirstNonNullCell) {
  TempDir dir;
  const auto db = make_db(dir / "s.db",
                          "CREATE TABLE road_status (road_id INTEGER, record_time TEXT);"
                          "INSERT INTO road_status VALUES (1, NULL), (2, '2023/10/10'), (3, 'x');");
  const auto catalog = build_catalog(db);
  const auto* col = catalog.tables()[0].find_column("record_time");
  ASSERT_NE(col, nullptr);
  EXPECT_EQ(col->sample_values, std::vector<std::string>{"2023/10/10"});
  EXPECT_EQ(col->value_type, "TEXT");
}

TEST(SchemaCatalog, SampleCountAndTruncationAreConfigurable) {
  TempDir dir;
  const auto db = make_db(dir / "s.db",
                          "CREATE TABLE t (a TEXT); INSERT INTO t VALUES ('abcdefgh'), ('ijk'), ('l');");
  CatalogOptions options;
  options.samples_per_column = 2;
  options.max_sample_length = 4;
  const auto catalog = build_catalog(db, nullptr, options);
  EXPECT_EQ(catalog.tables()[0].columns[0].sample_values,
            (std::vector<std::string>{"abcd", "ijk"}));
}

TEST(SchemaCatalog, TruncateNeverSplitsUtf8) {
  const std::string text = "ab\xE4\xB8\xAD";  // "ab" + one three-byte character
  EXPECT_EQ(truncate_utf8(text, 3), "ab");
  EXPECT_EQ(truncate_utf8(text, 5), text);
}

TEST(SchemaCatalog, SkipsInternalTablesAndViews) {
  TempDir dir;
  const auto db = make_db(dir / "v.db",
                          "CREATE TABLE t (id INTEGER PRIMARY KEY AUTOINCREMENT, a TEXT);"
                          "CREATE VIEW v AS SELECT a FROM t; INSERT INTO t(a) VALUES ('x');");
  const auto catalog = build_catalog(db);
  ASSERT_EQ(catalog.tables().size(), 1u);
  EXPECT_EQ(catalog.tables()[0].name, "t");
}

TEST(SchemaCatalog, AnnotationsOverrideInlineComments) {
  TempDir dir;
  const auto db = make_db(dir / "a.db",
                          "CREATE TABLE road_status (\n"
                          "  road_id INTEGER, -- road identifier\n"
                          "  speed REAL -- raw speed\n"
                          ");");
  const auto annotations =
      parse_annotations(R"({"road_status.speed": "average vehicle speed, km/h",
                            "road_status": "readings"})");
  const auto catalog = build_catalog(db, &annotations);
  const auto& t = catalog.tables()[0];
  EXPECT_EQ(t.comment, "readings");
  EXPECT_EQ(t.find_column("road_id")->meaning, "road identifier");
  EXPECT_EQ(t.find_column("speed")->meaning, "average vehicle speed, km/h");
}

TEST(SchemaCatalog, AnnotationsForUnknownColumnsWarn) {
  TempDir dir;
  const auto db = make_db(dir / "a.db", kToyScript);
  const auto annotations = parse_annotations(R"({"ghost.col": "nothing"})");
  Warnings warnings;
  build_catalog(db, &annotations, {}, &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("ghost"), std::string::npos);
}

TEST(Annotations, ParsesSingleMapping) {
  const auto a = parse_annotations(R"({"road_status.speed": "average vehicle speed, km/h"})");
  EXPECT_EQ(a.size(), 1u);
  EXPECT_EQ((a.column_meanings.at({"road_status", "speed"})), "average vehicle speed, km/h");
}

TEST(Annotations, EmptyTextGivesEmptyMap) {
  EXPECT_EQ(parse_annotations("").size(), 0u);
  EXPECT_EQ(parse_annotations("  \n").size(), 0u);
}

TEST(Annotations, MalformedInputNamesTheLine) {
  try {
    parse_annotations("{\n  \"t.a\": \"ok\",\n  \"t.b\": 3\n}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AnnotationParse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  try {
    parse_annotations("{\n  \"t.a\": \"ok\"\n  \"t.b\": \"x\"\n}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AnnotationParse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(RenderCompact, SingleTableFormat) {
  DatabaseCatalog catalog("x", {TableDescriptor{"t", std::nullopt, {{"a", "", "", {}}, {"b", "", "", {}}}}},
                          "");
  EXPECT_EQ(render_compact(catalog), "Table t, Columns=[a, b];");
}

TEST(RenderCompact, TwoTablesKeepCatalogOrder) {
  TempDir dir;
  const auto catalog = build_catalog(make_db(dir / "toy.db", kToyScript));
  EXPECT_EQ(render_compact(catalog),
            "Table road_status, Columns=[road_id, speed, record_time]; "
            "Table districts, Columns=[district_id, name];");
}

TEST(RenderEnriched, ColumnLineCarriesTypeMeaningSample) {
  TempDir dir;
  const auto db = make_db(dir / "toy.db", kToyScript);
  const auto annotations = parse_annotations(R"({"road_status.record_time": "reading time"})");
  const auto text = render_enriched(build_catalog(db, &annotations));
  const auto pos = text.find("  - record_time (");
  ASSERT_NE(pos, std::string::npos) << text;
  const auto line = text.substr(pos, text.find('\n', pos) - pos);
  EXPECT_NE(line.find("ValueType: TEXT"), std::string::npos);
  EXPECT_NE(line.find("Meaning: reading time"), std::string::npos);
  EXPECT_NE(line.find("Sampling: 2023/10/10"), std::string::npos);
}

TEST(RenderEnriched, LinksRestrictTables) {
  TempDir dir;
  const auto catalog = build_catalog(make_db(dir / "toy.db", kToyScript));
  const SchemaLinks links(std::vector<ColumnRef>{{"districts", "name"}});
  const auto text = render_enriched(catalog, &links);
  EXPECT_NE(text.find("Table districts"), std::string::npos);
  EXPECT_EQ(text.find("road_status"), std::string::npos);
}

TEST(RenderEnriched, EmptyMeaningStillRendered) {
  TempDir dir;
  const auto catalog = build_catalog(make_db(dir / "toy.db", kToyScript));
  const auto text = render_enriched(catalog);
  EXPECT_NE(text.find("  - speed (ValueType: REAL; Meaning: ; Sampling: 42.5)"), std::string::npos)
      << text;
}

TEST(RenderEnriched, UnresolvedLinkThrows) {
  TempDir dir;
  const auto catalog = build_catalog(make_db(dir / "toy.db", kToyScript));
  const SchemaLinks links(std::vector<ColumnRef>{{"ghost", "x"}});
  try {
    render_enriched(catalog, &links);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnresolvedLink);
  }
}

TEST(DatabaseCatalog, ResolveIsCaseInsensitiveAndCanonical) {
  TempDir dir;
  const auto catalog = build_catalog(make_db(dir / "toy.db", kToyScript));
  const auto ref = catalog.resolve("Road_Status", "SPEED");
  ASSERT_TRUE(ref);
  EXPECT_EQ(ref->table, "road_status");
  EXPECT_EQ(ref->column, "speed");
  EXPECT_FALSE(catalog.resolve("road_status", "spd"));
}

TEST(DatabaseCatalog, RejectsDuplicateNames) {
  EXPECT_THROW(DatabaseCatalog("x",
                               {TableDescriptor{"t", std::nullopt, {}},
                                TableDescriptor{"T", std::nullopt, {}}},
                               ""),
               Error);
}

TEST(Database, UnreadableFileIsReported) {
  TempDir dir;
  write_file(dir / "junk.db", "this is not a database file at all, not even close......");
  try {
    Database::open_readonly(dir / "junk.db");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnreadableDatabase);
  }
  EXPECT_THROW(Database::open_readonly(dir / "missing.db"), Error);
}

TEST(Database, RenderValue) {
  EXPECT_EQ(render_value(Value{}), "");
  EXPECT_EQ(render_value(Value{std::int64_t{42}}), "42");
  EXPECT_EQ(render_value(Value{2.0}), "2.0");
  EXPECT_EQ(render_value(Value{0.1}), "0.1");
  EXPECT_EQ(render_value(Value{std::string("x")}), "x");
}
