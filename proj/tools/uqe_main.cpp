#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "uqe/engine/engine.hpp"
#include "uqe/engine/ingest.hpp"
#include "uqe/engine/metrics.hpp"
#include "uqe/learn/search.hpp"
#include "uqe/util/text.hpp"

namespace {

using namespace uqe;

std::string read_text_or_literal(const std::string& value) {
  if (std::filesystem::exists(value)) {
    std::ifstream in(value, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  return value;
}

std::string format_result(const Table& table, const std::string& format) {
  if (format == "json") return format_table_json(table);
  if (format == "csv") return format_table_csv(table);
  return format_table_text(table);
}

void print_diagnostics(const Diagnostics& diag, std::ostream& out) {
  out << "-- oracle calls: " << diag.oracle_usage.total_calls
      << " (judge " << diag.oracle_usage.judge_calls << ", extract "
      << diag.oracle_usage.extract_calls << ", taxonomy "
      << diag.oracle_usage.taxonomy_calls << ", classify "
      << diag.oracle_usage.classify_calls << ", combined "
      << diag.oracle_usage.combined_calls << "); row units "
      << diag.oracle_usage.rows_fed << "\n";
  out << "-- estimated cost: " << diag.estimated_cost << " row units\n";
  if (diag.standard_error)
    out << "-- estimator standard error: " << *diag.standard_error << "\n";
  if (diag.unmapped_rows)
    out << "-- unmapped classifications: " << diag.unmapped_rows << "\n";
  for (const auto& w : diag.warnings) out << "-- warning: " << w << "\n";
  if (diag.aborted) out << "-- aborted with partial results: " << diag.error << "\n";
}

struct FixtureTruth {
  std::string column;
  std::string value;
};

struct Fixture {
  std::string table_name;
  Table table;
  EngineConfig config;
  std::string uql;
  std::size_t budget = 0;
  std::vector<std::uint64_t> seeds;
  FixtureTruth truth;
};

Fixture load_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("validate", "io", "cannot open fixture '" + path + "'");
  nlohmann::json doc = nlohmann::json::parse(in);
  Fixture fx;
  auto dir = std::filesystem::path(path).parent_path();
  fx.table_name = doc.value("table", "t");
  fx.table = ingest((dir / doc.at("data").get<std::string>()).string(),
                    (dir / doc.at("schema").get<std::string>()).string());
  if (doc.contains("config"))
    for (const auto& [key, value] : doc["config"].items())
      apply_config_line(fx.config, key, value.get<std::string>());
  fx.uql = doc.at("uql").get<std::string>();
  fx.budget = doc.value("budget", 0);
  if (doc.contains("seeds"))
    for (const auto& s : doc["seeds"]) fx.seeds.push_back(s.get<std::uint64_t>());
  if (fx.seeds.empty()) fx.seeds = {0, 1, 2, 3, 4, 5, 6, 7};
  fx.truth.column = doc.at("truth").at("column").get<std::string>();
  fx.truth.value = doc.at("truth").value("value", "");
  return fx;
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  if (xs.size() > 1) var /= static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var)};
}

int run_eval(const std::string& task, const std::string& fixture_path) {
  Fixture fx = load_fixture(fixture_path);
  fx.config.check();

  auto truth_matches = [&](std::size_t row) {
    auto j = fx.table.schema().index_of(fx.truth.column);
    if (!j) throw Error("validate", "unknown-column", "truth column missing");
    return fx.table.cell(row, *j).render() == fx.truth.value;
  };

  std::vector<double> metrics;
  for (std::uint64_t seed : fx.seeds) {
    Session session(fx.config);
    session.register_table(fx.table_name, fx.table);
    auto result = session.run_query(
        fx.uql, false, fx.budget ? std::optional<std::size_t>(fx.budget) : std::nullopt,
        seed);
    if (task == "agg") {
      double truth = 0.0;
      for (std::size_t i = 0; i < fx.table.num_rows(); ++i) truth += truth_matches(i);
      if (result.result.num_rows() != 1 || result.result.num_columns() < 1)
        throw Error("execute", "invalid-result", "aggregation fixture expects one row");
      double predicted = result.result.cell(0, 0).as_float();
      double err = eval_relative_error(predicted, truth);
      metrics.push_back(err);
      std::cout << "seed " << seed << ": predicted " << predicted << ", truth " << truth
                << ", relative error " << err << "\n";
    } else if (task == "retrieval") {
      std::unordered_set<std::size_t> relevant, retrieved;
      for (std::size_t i = 0; i < fx.table.num_rows(); ++i)
        if (truth_matches(i)) relevant.insert(i);
      for (std::size_t i : result.diagnostics.source_rows) retrieved.insert(i);
      double f1 = eval_f1(retrieved, relevant);
      metrics.push_back(f1);
      std::cout << "seed " << seed << ": retrieved " << retrieved.size() << ", relevant "
                << relevant.size() << ", F1 " << f1 << "\n";
    } else if (task == "groupby") {
      auto j = fx.table.schema().index_of(fx.truth.column);
      std::map<std::string, double> truth_hist;
      for (std::size_t i = 0; i < fx.table.num_rows(); ++i)
        truth_hist[fx.table.cell(i, *j).render()] += 1.0;
      std::vector<LabeledCount> truth;
      for (const auto& [label, count] : truth_hist) truth.push_back({label, count});

      // label column: first text column; count: first float column
      std::optional<std::size_t> label_col, count_col;
      for (std::size_t c = 0; c < result.result.num_columns(); ++c) {
        if (!label_col && result.result.schema().at(c).type == ValueType::Text) label_col = c;
        if (!count_col && result.result.schema().at(c).type == ValueType::Float) count_col = c;
      }
      if (!label_col || !count_col)
        throw Error("execute", "invalid-result", "group-by fixture needs label and count");
      std::vector<LabeledCount> predicted;
      for (std::size_t r = 0; r < result.result.num_rows(); ++r)
        predicted.push_back({result.result.cell(r, *label_col).render(),
                             result.result.cell(r, *count_col).as_float()});
      if (predicted.empty()) throw Error("execute", "invalid-result", "empty group result");
      HashEmbeddingProvider embedder(fx.config.embedding_dimension);
      double emd = eval_emd(predicted, truth, embedder);
      metrics.push_back(emd);
      std::cout << "seed " << seed << ": groups " << predicted.size() << ", EMD " << emd
                << "\n";
    } else {
      std::cerr << "unknown task '" << task << "'\n";
      return 2;
    }
  }
  auto [mean, std_dev] = mean_std(metrics);
  const char* name = task == "agg" ? "relative error" : task == "retrieval" ? "F1" : "EMD";
  std::cout << name << ": " << mean << " +- " << std_dev << " over " << metrics.size()
            << " seeds\n";
  return 0;
}

int run_repl(EngineConfig config) {
  Session session(std::move(config));
  bool explain = false, exact = false;
  std::cout << "uqe repl; \\ingest <name> <data> <schema>, \\tables, \\explain on|off, "
               "\\exact on|off, \\quit\n";
  std::string line, pending;
  while (std::cout << (pending.empty() ? "uqe> " : "...> ") && std::getline(std::cin, line)) {
    if (!pending.empty()) line = pending + "\n" + line;
    pending.clear();
    auto text = std::string(uqe::trim(line));
    if (text.empty()) continue;
    if (text.back() == '\\') {
      pending = text.substr(0, text.size() - 1);
      continue;
    }
    try {
      if (text[0] == '\\') {
        std::istringstream ss(text.substr(1));
        std::string cmd;
        ss >> cmd;
        if (cmd == "quit" || cmd == "q") break;
        if (cmd == "tables") {
          for (const auto& name : session.table_names()) {
            const auto& t = session.table(name);
            std::cout << name << ": " << t.num_rows() << " rows x " << t.num_columns()
                      << " columns\n";
          }
        } else if (cmd == "ingest") {
          std::string name, data, schema;
          ss >> name >> data >> schema;
          session.register_table(name, ingest(data, schema));
          std::cout << "ingested '" << name << "' ("
                    << session.table(name).num_rows() << " rows)\n";
        } else if (cmd == "explain") {
          std::string v;
          ss >> v;
          explain = v != "off";
        } else if (cmd == "exact") {
          std::string v;
          ss >> v;
          exact = v != "off";
        } else {
          std::cout << "unknown command \\" << cmd << "\n";
        }
        continue;
      }
      auto result = session.run_query(text, exact);
      if (explain) std::cout << result.explain_text;
      std::cout << format_table_text(result.result);
      print_diagnostics(result.diagnostics, std::cout);
    } catch (const std::exception& e) {
      std::cout << "error: " << e.what() << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uqe: budgeted semantic queries over unstructured tables"};
  app.require_subcommand(1);

  std::string data_path, schema_path, config_path;

  auto* ingest_cmd = app.add_subcommand("ingest", "validate a data file against a schema");
  ingest_cmd->add_option("--data", data_path, "JSONL or CSV data file")->required();
  ingest_cmd->add_option("--schema", schema_path, "schema JSON file")->required();

  std::string db_name = "t", uql, format = "text", trace_out;
  std::uint64_t seed_flag = 0;
  std::size_t budget_flag = 0;
  bool explain = false, exact = false, has_seed = false;

  auto* query_cmd = app.add_subcommand("query", "run one UQL query");
  query_cmd->add_option("--db", db_name, "table name the query's FROM refers to");
  query_cmd->add_option("--data", data_path, "JSONL or CSV data file")->required();
  query_cmd->add_option("--schema", schema_path, "schema JSON file")->required();
  query_cmd->add_option("--uql", uql, "UQL text or a file containing it")->required();
  query_cmd->add_option("--budget", budget_flag, "oracle row budget override");
  query_cmd->add_option("--seed", seed_flag, "run seed")->each([&](const std::string&) {
    has_seed = true;
  });
  query_cmd->add_flag("--explain", explain, "print candidate plans with costs");
  query_cmd->add_flag("--exact", exact, "run the brute-force reference evaluator");
  query_cmd->add_option("--format", format, "text | json | csv");
  query_cmd->add_option("--config", config_path, "engine config file");
  query_cmd->add_option("--trace-out", trace_out, "write the retrieval recall trace CSV");

  std::string task, fixture;
  auto* eval_cmd = app.add_subcommand("eval", "run the evaluation harness on a fixture");
  eval_cmd->add_option("--task", task, "agg | retrieval | groupby")->required();
  eval_cmd->add_option("--fixture", fixture, "fixture JSON file")->required();

  auto* repl_cmd = app.add_subcommand("repl", "interactive session");
  repl_cmd->add_option("--config", config_path, "engine config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest_cmd->parsed()) {
      Table table = uqe::ingest(data_path, schema_path);
      std::cout << "ok: " << table.num_rows() << " rows x " << table.num_columns()
                << " columns\n";
      for (const auto& col : table.schema().columns())
        std::cout << "  " << col.name << ": "
                  << (col.kind == uqe::ColumnKind::Unstructured ? "unstructured "
                                                                : "structured ")
                  << uqe::value_type_name(col.type) << "\n";
      return 0;
    }
    if (query_cmd->parsed()) {
      uqe::EngineConfig config =
          config_path.empty() ? uqe::EngineConfig{} : uqe::load_config(config_path);
      uqe::Session session(config);
      session.register_table(db_name, uqe::ingest(data_path, schema_path));
      auto result = session.run_query(
          read_text_or_literal(uql), exact,
          budget_flag ? std::optional<std::size_t>(budget_flag) : std::nullopt,
          has_seed ? std::optional<std::uint64_t>(seed_flag) : std::nullopt);
      if (explain) std::cout << result.explain_text;
      std::cout << format_result(result.result, format);
      print_diagnostics(result.diagnostics, std::cerr);
      if (!trace_out.empty()) {
        std::ofstream out(trace_out);
        out << uqe::trace_to_csv(result.diagnostics.recall_trace);
      }
      return result.diagnostics.aborted ? 3 : 0;
    }
    if (eval_cmd->parsed()) return run_eval(task, fixture);
    if (repl_cmd->parsed())
      return run_repl(config_path.empty() ? uqe::EngineConfig{}
                                          : uqe::load_config(config_path));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
