#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unordered_set>

#include "support/oracles.hpp"
#include "uqe/engine/engine.hpp"
#include "uqe/engine/ingest.hpp"
#include "uqe/engine/metrics.hpp"

using namespace uqe;

namespace {

EngineConfig review_config() {
  EngineConfig config;
  config.mock = testsup::review_mock();
  config.seed = 7;
  return config;
}

Session review_session(const testsup::SyntheticSpec& spec,
                       EngineConfig config = review_config()) {
  Session session(std::move(config));
  session.register_table("movie_reviews", testsup::make_labeled_table(spec));
  return session;
}

}  // namespace

TEST_CASE("jsonl ingestion: happy path, unknown field, line numbers") {
  std::string schema_json = R"({"columns": [
    {"name": "a", "kind": "structured", "type": "integer"},
    {"name": "b", "kind": "unstructured", "type": "text"}]})";
  auto schema = schema_from_json_text(schema_json, "mem");
  auto t = ingest_jsonl_text("{\"a\": 1, \"b\": \"x\"}\n{\"a\": 2, \"b\": \"y\"}\n"
                             "{\"a\": 3, \"b\": \"z\"}\n",
                             schema, "mem");
  CHECK(t.num_rows() == 3);

  try {
    ingest_jsonl_text("{\"a\": 1, \"oops\": 2}\n", schema, "mem");
    FAIL("expected unknown-field");
  } catch (const Error& e) {
    CHECK(e.code() == "unknown-field");
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
  try {
    ingest_jsonl_text("{\"a\": 1, \"b\": \"x\"}\nnot json\n", schema, "mem");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.code() == "parse");
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  // missing fields ingest as null
  auto with_null = ingest_jsonl_text("{\"a\": 4}\n", schema, "mem");
  CHECK(with_null.cell(0, 1).is_null());
}

TEST_CASE("csv ingestion maps the header and reports missing columns") {
  std::string schema_json = R"({"columns": [
    {"name": "a", "kind": "structured", "type": "integer"},
    {"name": "b", "kind": "structured", "type": "text"}]})";
  auto schema = schema_from_json_text(schema_json, "mem");
  auto t = ingest_csv_text("b,a\n\"x,1\",5\ny,6\n", schema, "mem");
  CHECK(t.num_rows() == 2);
  CHECK(t.cell(0, 0).as_integer() == 5);
  CHECK(t.cell(0, 1).as_string() == "x,1");

  try {
    ingest_csv_text("a\n1\n", schema, "mem");
    FAIL("expected schema violation");
  } catch (const Error& e) {
    CHECK(e.code() == "schema-violation");
    CHECK(std::string(e.what()).find("'b'") != std::string::npos);
  }
}

TEST_CASE("exhaustive-budget COUNT equals the ground truth exactly") {
  auto session = review_session({.n = 200, .prevalence = 0.4, .seed = 3});
  auto truth = testsup::count_positive(session.table("movie_reviews"));
  auto result = session.run_query(
      "SELECT COUNT(*) as count FROM movie_reviews WHERE \"the review is positive\"", false,
      200);
  REQUIRE(result.result.num_rows() == 1);
  CHECK(result.result.cell(0, 0).as_float() == static_cast<double>(truth));
  CHECK(result.diagnostics.oracle_usage.judge_calls == 200);
}

TEST_CASE("budgeted retrieval beats the uniform-recall baseline on clustered data") {
  auto session = review_session({.n = 1000, .prevalence = 0.05, .seed = 21});
  const auto& table = session.table("movie_reviews");
  double total_pos = static_cast<double>(testsup::count_positive(table));
  auto result = session.run_query(
      "SELECT * FROM movie_reviews WHERE \"the review is positive\"", false, 100, 5);
  double recall = static_cast<double>(result.diagnostics.source_rows.size()) / total_pos;
  CHECK(recall > 0.1);  // uniform expectation at B = 0.1 N
  CHECK(result.diagnostics.oracle_usage.judge_calls <= 100);
  CHECK(!result.diagnostics.recall_trace.empty());
}

TEST_CASE("group-by over the semantic key returns labeled counts") {
  EngineConfig config;
  config.mock.label_column = "sentiment";
  Session session(config);
  session.register_table("movie_reviews",
                         testsup::make_labeled_table({.n = 60, .prevalence = 0.5, .seed = 2}));
  auto result = session.run_query(
      "SELECT derived, COUNT(*) FROM movie_reviews "
      "GROUP BY \"the sentiment of the review\" AS derived LIMIT 10");
  REQUIRE(result.result.num_rows() == 2);
  CHECK(result.result.schema().at(0).name == "derived");
  double total = result.result.cell(0, 1).as_float() + result.result.cell(1, 1).as_float();
  CHECK(total == 60.0);
}

TEST_CASE("SUM and AVG flow through the pipeline at exact budget") {
  auto session = review_session({.n = 150, .prevalence = 0.4, .seed = 33});
  const auto& table = session.table("movie_reviews");
  auto sentiment = *table.schema().index_of("sentiment");
  auto score = *table.schema().index_of("score");
  double truth_sum = 0.0, truth_n = 0.0;
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    if (table.cell(i, sentiment).as_string() != "positive") continue;
    truth_sum += table.cell(i, score).as_float();
    truth_n += 1.0;
  }
  auto result = session.run_query(
      "SELECT SUM(score) AS total, AVG(score) AS mean, COUNT(*) AS n FROM movie_reviews "
      "WHERE \"the review is positive\"",
      false, 150);
  CHECK(result.result.cell(0, 0).as_float() == doctest::Approx(truth_sum).epsilon(1e-12));
  CHECK(result.result.cell(0, 1).as_float() ==
        doctest::Approx(truth_sum / truth_n).epsilon(1e-12));
  CHECK(result.result.cell(0, 2).as_float() == truth_n);

  // budgeted run still produces a finite estimate and respects the budget
  auto sampled = session.run_query(
      "SELECT SUM(score) FROM movie_reviews WHERE \"the review is positive\"", false, 32);
  CHECK(std::isfinite(sampled.result.cell(0, 0).as_float()));
  CHECK(sampled.diagnostics.oracle_usage.judge_calls <= 32);
}

TEST_CASE("AVG over zero satisfying mass yields the empty marker") {
  auto session = review_session({.n = 40, .prevalence = 0.5, .seed = 34});
  auto result = session.run_query(
      "SELECT AVG(score) FROM movie_reviews WHERE \"impossible condition\"", false, 40);
  CHECK(result.result.cell(0, 0).is_null());
}

TEST_CASE("mixed structured and semantic WHERE evaluates structured first") {
  auto session = review_session({.n = 200, .prevalence = 0.5, .seed = 35});
  const auto& table = session.table("movie_reviews");
  auto sentiment = *table.schema().index_of("sentiment");
  auto year = *table.schema().index_of("year");
  double truth = 0.0;
  std::size_t structured_pass = 0;
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    bool early = table.cell(i, year).as_integer() < 2015;
    structured_pass += early;
    truth += early && table.cell(i, sentiment).as_string() == "positive";
  }
  auto result = session.run_query(
      "SELECT COUNT(*) FROM movie_reviews WHERE year < 2015 AND \"the review is positive\"",
      false, 200);
  CHECK(result.result.cell(0, 0).as_float() == truth);
  // only the structured survivors were ever judged
  CHECK(result.diagnostics.oracle_usage.judge_calls == structured_pass);
}

TEST_CASE("group-by estimate upper-bounds the metered row units") {
  EngineConfig config;
  config.mock.label_column = "sentiment";
  config.seed = 4;
  Session session(config);
  session.register_table(
      "movie_reviews", testsup::make_labeled_table({.n = 700, .prevalence = 0.5, .seed = 36}));
  auto result = session.run_query(
      "SELECT s, COUNT(*) FROM movie_reviews GROUP BY \"the sentiment\" AS s", false, 128);
  CHECK(static_cast<double>(result.diagnostics.oracle_usage.rows_fed) <=
        result.diagnostics.estimated_cost);
  CHECK(result.diagnostics.oracle_usage.classify_calls <= 128);
}

TEST_CASE("one-shot runs are bit-reproducible for a fixed seed") {
  auto spec = testsup::SyntheticSpec{.n = 600, .prevalence = 0.3, .seed = 5};
  auto a = review_session(spec).run_query(
      "SELECT COUNT(*) FROM movie_reviews WHERE \"the review is positive\"", false, 128, 11);
  auto b = review_session(spec).run_query(
      "SELECT COUNT(*) FROM movie_reviews WHERE \"the review is positive\"", false, 128, 11);
  CHECK(a.result == b.result);
  CHECK(a.diagnostics.oracle_usage.judge_calls == b.diagnostics.oracle_usage.judge_calls);
  CHECK(a.diagnostics.standard_error == b.diagnostics.standard_error);
  auto c = review_session(spec).run_query(
      "SELECT COUNT(*) FROM movie_reviews WHERE \"the review is positive\"", false, 128, 12);
  CHECK(a.result.cell(0, 0).as_float() != c.result.cell(0, 0).as_float());
}

TEST_CASE("TO binds the result to a session table") {
  auto session = review_session({.n = 50, .prevalence = 0.5, .seed = 9});
  session.run_query("SELECT year FROM movie_reviews WHERE year < 2015 TO early");
  REQUIRE(session.has_table("early"));
  auto again = session.run_query("SELECT COUNT(*) FROM early");
  CHECK(again.result.cell(0, 0).as_float() ==
        static_cast<double>(session.table("early").num_rows()));
}

TEST_CASE("unsupported literal positions are rejected at validation") {
  auto session = review_session({.n = 10, .prevalence = 0.5, .seed = 1});
  try {
    session.run_query("SELECT 1 FROM movie_reviews");
    FAIL("expected unsupported literal");
  } catch (const Error& e) {
    CHECK(e.code() == "unsupported-literal");
    CHECK(e.stage() == "validate");
  }
  try {
    session.run_query("SELECT * FROM movie_reviews ORDER BY \"the best\"");
    FAIL("expected order-by error");
  } catch (const Error& e) {
    CHECK(e.code() == "order-by-concrete");
  }
  CHECK_THROWS_AS(session.run_query("SELECT nope FROM movie_reviews"), Error);
  CHECK_THROWS_AS(session.run_query("SELECT * FROM no_such_table"), Error);
}

TEST_CASE("ORDER BY and LIMIT shape the output deterministically") {
  auto session = review_session({.n = 30, .prevalence = 0.5, .seed = 14});
  auto result =
      session.run_query("SELECT year FROM movie_reviews ORDER BY year DESC LIMIT 5");
  REQUIRE(result.result.num_rows() == 5);
  for (std::size_t i = 1; i < 5; ++i)
    CHECK(result.result.cell(i - 1, 0).as_integer() >=
          result.result.cell(i, 0).as_integer());
}

TEST_CASE("diagnostics match the metered oracle exactly") {
  auto session = review_session({.n = 300, .prevalence = 0.5, .seed = 17});
  auto before = session.oracle().meter().snapshot();
  auto result = session.run_query(
      "SELECT COUNT(*) FROM movie_reviews WHERE \"the review is positive\"", false, 64);
  auto delta = session.oracle().meter().snapshot() - before;
  CHECK(result.diagnostics.oracle_usage.total_calls == delta.total_calls);
  CHECK(result.diagnostics.oracle_usage.judge_calls == delta.judge_calls);
  CHECK(delta.judge_calls <= 64);
}

TEST_CASE("--exact routes through the reference evaluator") {
  auto session = review_session({.n = 120, .prevalence = 0.35, .seed = 29});
  auto truth = testsup::count_positive(session.table("movie_reviews"));
  auto exact = session.run_query(
      "SELECT COUNT(*) FROM movie_reviews WHERE \"the review is positive\"", true);
  CHECK(exact.result.cell(0, 0).as_float() == static_cast<double>(truth));
}

TEST_CASE("eval_relative_error closed forms") {
  CHECK(eval_relative_error(95.0, 100.0) == 0.05);
  CHECK(eval_relative_error(100.0, 100.0) == 0.0);
  CHECK_THROWS_AS(eval_relative_error(1.0, 0.0), Error);
  // pipeline value vs hand-computed ratio
  auto session = review_session({.n = 100, .prevalence = 0.5, .seed = 31});
  double truth = static_cast<double>(testsup::count_positive(session.table("movie_reviews")));
  auto result = session.run_query(
      "SELECT COUNT(*) FROM movie_reviews WHERE \"the review is positive\"", false, 100);
  CHECK(eval_relative_error(result.result.cell(0, 0).as_float(), truth) ==
        std::abs(result.result.cell(0, 0).as_float() - truth) / truth);
}

TEST_CASE("eval_f1 closed forms") {
  std::unordered_set<std::size_t> relevant = {1, 2, 3, 4};
  CHECK(eval_f1(relevant, relevant) == 1.0);
  CHECK(eval_f1({9, 10}, relevant) == 0.0);
  CHECK(eval_f1({}, {}) == 1.0);
  CHECK(eval_f1({}, relevant) == 0.0);
  // retrieved = half of relevant, no false positives -> F1 = 2/3
  CHECK(eval_f1({1, 2}, relevant) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("eval_emd closed forms and brute-force agreement") {
  HashEmbeddingProvider embedder(64);
  std::vector<LabeledCount> a = {{"book", 3}, {"cancel", 1}};
  CHECK(eval_emd(a, a, embedder) == 0.0);

  // same labels, different proportions: mass moves between the two labels
  std::vector<LabeledCount> b = {{"book", 1}, {"cancel", 3}};
  double d01 = [&] {
    std::vector<float> v(2 * 64);
    embedder.embed_batch({"book", "cancel"}, v.data());
    double dot = 0, na = 0, nb = 0;
    for (int j = 0; j < 64; ++j) {
      dot += v[j] * v[64 + j];
      na += v[j] * v[j];
      nb += v[64 + j] * v[64 + j];
    }
    return 1.0 - dot / std::sqrt(na * nb);
  }();
  CHECK(eval_emd(a, b, embedder) == doctest::Approx(0.5 * d01).epsilon(1e-12));

  // random histograms vs the transport-vertex oracle
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mass(0.1, 3.0);
  for (int trial = 0; trial < 6; ++trial) {
    std::size_t m = 4, n = trial % 2 ? 4 : 5;
    std::vector<double> supply(m), demand(n);
    double st = 0, dt = 0;
    for (auto& s : supply) {
      s = mass(rng);
      st += s;
    }
    for (auto& d : demand) {
      d = mass(rng);
      dt += d;
    }
    for (auto& s : supply) s /= st;
    for (auto& d : demand) d /= dt;
    std::vector<std::vector<double>> cost(m, std::vector<double>(n));
    std::uniform_real_distribution<double> c01(0.0, 2.0);
    for (auto& row : cost)
      for (auto& c : row) c = c01(rng);
    double fast = solve_transport(supply, demand, cost);
    double brute = testsup::brute_force_transport(supply, demand, cost);
    REQUIRE(fast == doctest::Approx(brute).epsilon(1e-9));
  }

  CHECK_THROWS_AS(eval_emd({{"a", 0.0}}, a, embedder), Error);  // zero mass side
}

TEST_CASE("config files parse with overrides and reject junk") {
  EngineConfig config;
  apply_config_line(config, "budget.aggregation", "64");
  apply_config_line(config, "oracle.label_column", "sentiment");
  apply_config_line(config, "bind.the review is positive", "review");
  apply_config_line(config, "mock.judge.the review is positive", "sentiment=positive");
  CHECK(config.aggregation_budget == 64);
  CHECK(config.mock.label_column == "sentiment");
  CHECK(config.column_bindings.at("the review is positive") == "review");
  CHECK(config.mock.judge_bindings.at("the review is positive").second == "positive");
  apply_config_line(config, "oracle.template.judge_system",
                    "Judge this review: {WHERE_CLAUSE}\\nReply strictly.");
  CHECK(config.llm.templates.judge_system ==
        "Judge this review: {WHERE_CLAUSE}\nReply strictly.");
  CHECK_THROWS_AS(apply_config_line(config, "oracle.template.nope", "x"), Error);
  CHECK_THROWS_AS(apply_config_line(config, "no.such.key", "1"), Error);
  config.aggregation_budget = 0;
  CHECK_THROWS_AS(config.check(), Error);
}

TEST_CASE("result formatting renders text, json and csv") {
  Schema schema({{"label", ColumnKind::Structured, ValueType::Text, {}},
                 {"count(*)", ColumnKind::Structured, ValueType::Float, {}}});
  Table t = validate_table(schema, {{Value::text("a,b"), Value::real(2.0)}});
  auto text = format_table_text(t);
  CHECK(text.find("label") != std::string::npos);
  auto csv = format_table_csv(t);
  CHECK(csv.find("\"a,b\"") != std::string::npos);
  auto json = format_table_json(t);
  CHECK(json.find("\"count(*)\": 2.0") != std::string::npos);
}

TEST_CASE("empty-table queries return empty results without errors") {
  EngineConfig config = review_config();
  Session session(config);
  session.register_table("movie_reviews",
                         validate_table(testsup::review_schema(), {}));
  auto result = session.run_query(
      "SELECT * FROM movie_reviews WHERE \"the review is positive\"");
  CHECK(result.result.num_rows() == 0);
  auto agg = session.run_query(
      "SELECT COUNT(*) FROM movie_reviews WHERE \"the review is positive\"");
  CHECK(agg.result.cell(0, 0).as_float() == 0.0);
}
