#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace hospigrid;
using namespace hospigrid::query;

namespace {

// Seeded single-site database: identical rows land in a LocalDb (system under
// test) and an OracleDb (brute-force evaluator).
struct SeededDb {
  catalog::LocalDb db;
  testutil::OracleDb oracle;
};

SeededDb seeded_db(std::uint64_t seed, std::size_t nrows) {
  SeededDb out;
  auto ds = testutil::generate_dataset(seed, {"cambridge"}, nrows);
  for (const auto& bytes : ds.files.at("cambridge")) {
    auto file = model::parse_dicom_lite(bytes);
    auto [pfile, prec] = model::pseudonymize(file, "cambridge", to_bytes("k"));
    auto rec = model::extract_metadata(
        pfile, "/mammogrid/cambridge/" + pfile.required_tag("ImageID") + ".dcml",
        {"cambridge", ""});
    out.db.insert_image(rec);
    out.db.insert_patient(prec);
  }
  for (const auto& table : {"images", "studies", "patients"})
    for (const auto& row : out.db.rows(table)) out.oracle.add(table, row);
  return out;
}

}  // namespace

TEST_CASE("a simple filter translates to parameterized SQL") {
  QueryDoc doc;
  doc.from = "images";
  doc.select = {"image_id"};
  doc.predicate = Pred::atom("modality", CmpOp::Eq, "MG");
  auto plan = translate_query(doc, catalog::default_schema());
  CHECK(plan.statement == "SELECT image_id FROM images WHERE modality = ?");
  CHECK(plan.parameters == std::vector<std::string>{"MG"});
}

TEST_CASE("no predicate means no WHERE clause") {
  QueryDoc doc;
  doc.from = "patients";
  doc.select = {"pseudonym", "site_of_origin"};
  auto plan = translate_query(doc, catalog::default_schema());
  CHECK(plan.statement == "SELECT pseudonym, site_of_origin FROM patients");
  CHECK(plan.parameters.empty());
}

TEST_CASE("compound predicates are fully parenthesized, parameters depth-first") {
  QueryDoc doc;
  doc.from = "images";
  doc.select = {"lfn"};
  doc.predicate = Pred::combine(
      Pred::Kind::Or,
      Pred::combine(Pred::Kind::And, Pred::atom("modality", CmpOp::Eq, "MG"),
                    Pred::atom("study_date", CmpOp::Ge, "2004-03-01")),
      Pred::atom("image_id", CmpOp::Contains, "img-"));
  auto plan = translate_query(doc, catalog::default_schema());
  CHECK(plan.statement ==
        "SELECT lfn FROM images WHERE ((modality = ? AND study_date >= ?)"
        " OR image_id CONTAINS ?)");
  CHECK(plan.parameters ==
        std::vector<std::string>{"MG", "2004-03-01", "img-"});
}

TEST_CASE("joins translate in declaration order") {
  QueryDoc doc;
  doc.from = "images";
  doc.select = {"image_id", "site_of_origin"};
  doc.joins.push_back({"patients", "patient_pseudonym", "pseudonym"});
  auto plan = translate_query(doc, catalog::default_schema());
  CHECK(plan.statement ==
        "SELECT image_id, site_of_origin FROM images"
        " JOIN patients ON patient_pseudonym = pseudonym");
}

TEST_CASE("validation rejects unknown tables, columns, and deep predicates") {
  const auto& schema = catalog::default_schema();
  QueryDoc doc;
  doc.from = "nope";
  doc.select = {"x"};
  CHECK_THROWS_AS(validate_query(doc, schema), GridError);

  doc.from = "images";
  doc.select = {"not_a_column"};
  try {
    validate_query(doc, schema);
    FAIL("expected UnknownColumn");
  } catch (const GridError& e) {
    CHECK(e.code() == Errc::UnknownColumn);
  }

  doc.select = {"image_id"};
  auto deep = Pred::atom("modality", CmpOp::Eq, "MG");
  for (int i = 0; i < kMaxPredicateDepth; ++i)
    deep = Pred::combine(Pred::Kind::And, std::move(deep),
                         Pred::atom("modality", CmpOp::Eq, "MG"));
  doc.predicate = std::move(deep);
  try {
    validate_query(doc, schema);
    FAIL("expected DepthExceeded");
  } catch (const GridError& e) {
    CHECK(e.code() == Errc::DepthExceeded);
  }
}

TEST_CASE("parse_plan inverts translate_query") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto doc = testutil::generate_query(s, Scope::Local);
    auto plan = translate_query(doc, catalog::default_schema());
    auto back = parse_plan(plan);
    auto plan2 = translate_query(back, catalog::default_schema());
    CHECK(plan2.statement == plan.statement);
    CHECK(plan2.parameters == plan.parameters);
  }
}

TEST_CASE("local execution agrees with the brute-force oracle") {
  auto fixture = seeded_db(42, 200);
  for (std::uint64_t s = 0; s < 60; ++s) {
    auto doc = testutil::generate_query(s, Scope::Local);
    auto plan = translate_query(doc, catalog::default_schema());
    auto rs = execute_local(plan, fixture.db, "cambridge");
    auto expected = testutil::oracle_execute(doc, fixture.oracle);
    std::multiset<std::vector<std::string>> got(rs.rows.begin(), rs.rows.end());
    CHECK(got == expected);
    CHECK(rs.columns == doc.select);
  }
}

TEST_CASE("local execution is deterministic, rows ordered by primary key") {
  auto fixture = seeded_db(11, 120);
  auto doc = testutil::generate_query(5, Scope::Local);
  auto plan = translate_query(doc, catalog::default_schema());
  auto a = execute_local(plan, fixture.db, "cambridge");
  auto b = execute_local(plan, fixture.db, "cambridge");
  CHECK(a == b);
}

TEST_CASE("merge concatenates disjoint partial results") {
  ResultSet a{{"image_id", "modality"}, {{"i1", "MG"}, {"i2", "CR"}}, "oxford"};
  ResultSet b{{"image_id", "modality"},
              {{"i3", "MG"}, {"i4", "US"}, {"i5", "MG"}},
              "udine"};
  ResultSet c{{"image_id", "modality"}, {{"i0", "MR"}, {"i6", "MG"}}, "cambridge"};
  auto merged = merge_results({a, b, c});
  CHECK(merged.result.rows.size() == 7);
  CHECK(merged.dedup_count == 0);
  // sorted by first column
  CHECK(merged.result.rows.front()[0] == "i0");
  CHECK(merged.result.rows.back()[0] == "i6");
}

TEST_CASE("merge deduplicates identical partial results") {
  ResultSet a{{"image_id", "lfn"}, {{"i1", "/l/1"}, {"i2", "/l/2"}}, "oxford"};
  auto merged = merge_results({a, a, a});
  CHECK(merged.result.rows.size() == 2);
  CHECK(merged.dedup_count == 4);
}

TEST_CASE("merge keys on the lfn column when present") {
  // same lfn reported by two sites with different site_of_origin is one record
  ResultSet a{{"lfn", "site_of_origin"}, {{"/l/1", "oxford"}}, "oxford"};
  ResultSet b{{"lfn", "site_of_origin"}, {{"/l/1", "oxford"}}, "udine"};
  auto merged = merge_results({a, b});
  CHECK(merged.result.rows.size() == 1);
  CHECK(merged.dedup_count == 1);
}

TEST_CASE("merge rejects mismatched column sets") {
  ResultSet a{{"image_id"}, {{"i1"}}, "oxford"};
  ResultSet b{{"lfn"}, {{"/l/1"}}, "udine"};
  CHECK_THROWS_AS(merge_results({a, b}), GridError);
}

TEST_CASE("seeded overlap merge agrees with a set-union oracle") {
  std::uint64_t st = 99;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<ResultSet> parts;
    std::set<std::string> expected_keys;
    std::uint64_t total_rows = 0;
    for (int site = 0; site < 3; ++site) {
      ResultSet rs;
      rs.columns = {"lfn", "modality"};
      rs.origin_site = "site" + std::to_string(site);
      std::uint64_t n = mix64(st, trial * 10 + site) % 20;
      for (std::uint64_t i = 0; i < n; ++i) {
        std::string lfn = "/l/" + std::to_string(mix64(st, trial * 1000 + i) % 25);
        rs.rows.push_back({lfn, "MG"});
        expected_keys.insert(lfn);
        ++total_rows;
      }
      parts.push_back(std::move(rs));
    }
    auto merged = merge_results(parts);
    CHECK(merged.result.rows.size() == expected_keys.size());
    CHECK(merged.dedup_count == total_rows - expected_keys.size());
    CHECK(std::is_sorted(merged.result.rows.begin(), merged.result.rows.end(),
                         [](const auto& a, const auto& b) { return a[0] <= b[0]; }));
  }
}

TEST_CASE("query documents survive the wire round-trip") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto doc = testutil::generate_query(s, s % 2 ? Scope::Global : Scope::Local);
    auto text = serialize_query_doc(doc);
    auto back = parse_query_doc(text);
    CHECK(serialize_query_doc(back) == text);
    CHECK(back.scope == doc.scope);
  }
}

TEST_CASE("result documents round-trip, including awkward field content") {
  ResultDoc doc;
  doc.columns = {"a", "b"};
  doc.rows = {{"tab\there", "newline\nhere"}, {"back\\slash", ""}};
  doc.dedup_count = 3;
  auto text = serialize_result_doc(doc);
  auto back = parse_result_doc(text);
  CHECK(back.columns == doc.columns);
  CHECK(back.rows == doc.rows);
  CHECK(back.dedup_count == 3);

  // fuzz: random field bytes drawn from a hostile alphabet
  static const char alphabet[] = "ab\t\n\\=,";
  std::uint64_t st = 5;
  for (int trial = 0; trial < 200; ++trial) {
    ResultDoc d;
    d.columns = {"c1", "c2"};
    std::uint64_t n = mix64(st, trial) % 5;
    for (std::uint64_t i = 0; i < n; ++i) {
      std::vector<std::string> row(2);
      for (auto& field : row) {
        std::uint64_t len = mix64(st, trial * 100 + i) % 8;
        for (std::uint64_t k = 0; k < len; ++k)
          field.push_back(alphabet[mix64(st, trial * 10000 + i * 100 + k) % 7]);
      }
      d.rows.push_back(std::move(row));
    }
    auto t = serialize_result_doc(d);
    auto b = parse_result_doc(t);
    CHECK(b.rows == d.rows);
  }
}

TEST_CASE("malformed documents are rejected") {
  CHECK_THROWS_AS(parse_result_doc("nope"), GridError);
  CHECK_THROWS_AS(parse_result_doc("RES 1 1 0\nc1\n"), GridError);  // missing END
  CHECK_THROWS_AS(parse_query_doc("QRY Local\nSEL a\nEND\n"), GridError);
  CHECK_THROWS_AS(parse_query_doc("QRY Local images\nSEL a\n"), GridError);
}
