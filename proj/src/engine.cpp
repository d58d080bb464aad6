#include "uqe/engine/engine.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "uqe/util/text.hpp"

namespace uqe {

void EngineConfig::check() const {
  if (aggregation_budget == 0 || retrieval_budget == 0 || taxonomy_budget == 0 ||
      batch_size == 0)
    throw Error("validate", "invalid-config", "budgets must be positive");
  if (parallelism < 1) throw Error("validate", "invalid-config", "parallelism must be >= 1");
  if (clusters < 1) throw Error("validate", "invalid-config", "clusters must be >= 1");
  if (oracle_kind != "mock" && oracle_kind != "llm-http")
    throw Error("validate", "invalid-config", "unknown oracle backend '" + oracle_kind + "'");
  if (embedding_provider != "hash" && embedding_provider != "http")
    throw Error("validate", "invalid-config",
                "unknown embedding provider '" + embedding_provider + "'");
}

void apply_config_line(EngineConfig& config, const std::string& key,
                       const std::string& value) {
  auto as_size = [&](const std::string& v) { return static_cast<std::size_t>(std::stoull(v)); };
  if (key == "oracle.kind") config.oracle_kind = value;
  else if (key == "oracle.label_column") config.mock.label_column = value;
  else if (key == "oracle.error_rate") config.mock.error_rate = std::stod(value);
  else if (key == "oracle.mock_seed") config.mock.seed = std::stoull(value);
  else if (key == "oracle.endpoint") config.llm.endpoint = value;
  else if (key == "oracle.path") config.llm.path = value;
  else if (key == "oracle.model") config.llm.model = value;
  else if (key == "oracle.auth_env") config.llm.auth_env = value;
  else if (key == "oracle.max_retries") config.llm.max_retries = std::stoi(value);
  else if (key == "oracle.timeout_seconds") config.llm.timeout_seconds = std::stoi(value);
  else if (key == "embedding.provider") config.embedding_provider = value;
  else if (key == "embedding.dimension") config.embedding_dimension = as_size(value);
  else if (key == "embedding.endpoint") config.embedding_http.endpoint = value;
  else if (key == "embedding.model") config.embedding_http.model = value;
  else if (key == "embedding.auth_env") config.embedding_http.auth_env = value;
  else if (key == "clusters") config.clusters = as_size(value);
  else if (key == "budget.aggregation") config.aggregation_budget = as_size(value);
  else if (key == "budget.retrieval") config.retrieval_budget = as_size(value);
  else if (key == "budget.taxonomy") config.taxonomy_budget = as_size(value);
  else if (key == "batch_size") config.batch_size = as_size(value);
  else if (key == "parallelism") config.parallelism = std::stoi(value);
  else if (key == "seed") config.seed = std::stoull(value);
  else if (key == "selectivity_prior") config.selectivity_prior = std::stod(value);
  else if (key == "cache_dir") config.cache_dir = value;
  else if (key.rfind("oracle.template.", 0) == 0) {
    // literal "\n" sequences stand for newlines in the line-based config
    std::string text = replace_all(value, "\\n", "\n");
    std::string which = key.substr(16);
    PromptTemplates& t = config.llm.templates;
    if (which == "judge_system") t.judge_system = text;
    else if (which == "judge_user") t.judge_user = text;
    else if (which == "extract_system") t.extract_system = text;
    else if (which == "extract_user") t.extract_user = text;
    else if (which == "taxonomy_system") t.taxonomy_system = text;
    else if (which == "taxonomy_user") t.taxonomy_user = text;
    else if (which == "rows_item_header") t.rows_item_header = text;
    else if (which == "classify_system") t.classify_system = text;
    else if (which == "classify_user") t.classify_user = text;
    else if (which == "combined_system") t.combined_system = text;
    else if (which == "combined_user") t.combined_user = text;
    else
      throw Error("validate", "invalid-config", "unknown prompt template '" + which + "'");
  } else if (key.rfind("bind.", 0) == 0)
    config.column_bindings[key.substr(5)] = value;
  else if (key.rfind("mock.judge.", 0) == 0) {
    // mock.judge.<condition text> = column=value
    auto eq = value.find('=');
    if (eq == std::string::npos)
      throw Error("validate", "invalid-config",
                  "mock.judge binding needs 'column=value', got '" + value + "'");
    config.mock.judge_bindings[key.substr(11)] = {value.substr(0, eq), value.substr(eq + 1)};
  } else if (key.rfind("mock.extract.", 0) == 0) {
    config.mock.extract_bindings[key.substr(13)] = value;
  } else {
    throw Error("validate", "invalid-config", "unknown config key '" + key + "'");
  }
}

EngineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("validate", "io", "cannot open config '" + path + "'");
  EngineConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw Error("validate", "invalid-config",
                  path + " line " + std::to_string(line_no) + ": expected key = value");
    std::string key(trim(t.substr(0, eq)));
    std::string value(trim(t.substr(eq + 1)));
    apply_config_line(config, key, value);
  }
  config.check();
  return config;
}

Session::Session(EngineConfig config) : config_(std::move(config)) {
  config_.check();
  if (config_.oracle_kind == "mock")
    oracle_ = std::make_unique<MockOracle>(config_.mock);
  else
    oracle_ = std::make_unique<LlmHttpBackend>(config_.llm);
  if (config_.embedding_provider == "hash")
    embedder_ = std::make_unique<HashEmbeddingProvider>(config_.embedding_dimension);
  else
    embedder_ = std::make_unique<HttpEmbeddingProvider>(config_.embedding_http);
  if (!config_.cache_dir.empty())
    cache_ = std::make_unique<EmbeddingCache>(config_.cache_dir);
}

void Session::register_table(const std::string& name, Table table) {
  tables_.insert_or_assign(name, std::move(table));
}

const Table& Session::table(const std::string& name) const {
  auto it = tables_.find(name);
  if (it == tables_.end())
    throw Error("validate", "unknown-table", "no table named '" + name + "' in session");
  return it->second;
}

bool Session::has_table(const std::string& name) const { return tables_.count(name) > 0; }

std::vector<std::string> Session::table_names() const {
  std::vector<std::string> names;
  for (const auto& [name, _] : tables_) names.push_back(name);
  return names;
}

QueryResult Session::run_query(const std::string& uql, bool exact,
                               std::optional<std::size_t> budget,
                               std::optional<std::uint64_t> seed) {
  auto ast = uql::parse_query(uql);
  const Table& source = table(ast.from);
  validate_query(ast, source.schema());
  const auto query_class = uql::classify(ast);

  BudgetConfig budgets;
  budgets.aggregation_budget = budget.value_or(config_.aggregation_budget);
  budgets.retrieval_budget = budget.value_or(config_.retrieval_budget);
  budgets.taxonomy_budget = config_.taxonomy_budget;
  budgets.selectivity_prior = config_.selectivity_prior;

  auto stats = compute_stats(source, ast.where_dnf);
  auto plans = enumerate_plans(ast, query_class, stats, budgets);
  Plan chosen = select_plan(plans);
  auto binding = bind_plan(chosen, ast, source.schema(), config_.column_bindings);

  QueryResult out;
  out.candidate_plans = plans;
  out.chosen_plan = chosen;
  out.explain_text = explain_plans(plans, chosen);

  if (exact) {
    const MeterSnapshot before = oracle_->meter().snapshot();
    out.result = reference_evaluate(ast, source, binding, *oracle_,
                                    config_.taxonomy_budget, seed.value_or(config_.seed));
    out.diagnostics.oracle_usage = oracle_->meter().snapshot() - before;
    out.diagnostics.estimated_cost = chosen.total_estimated_cost;
  } else {
    ExecConfig exec;
    exec.aggregation_budget = budgets.aggregation_budget;
    exec.retrieval_budget = budgets.retrieval_budget;
    exec.taxonomy_budget = config_.taxonomy_budget;
    exec.batch_size = config_.batch_size;
    exec.clusters = config_.clusters;
    exec.parallelism = config_.parallelism;
    exec.seed = seed.value_or(config_.seed);
    exec.selectivity_prior = config_.selectivity_prior;
    auto output = execute_plan(chosen, ast, source, binding, *oracle_, *embedder_,
                               cache_.get(), exec);
    out.result = std::move(output.result);
    out.diagnostics = std::move(output.diagnostics);
  }

  if (ast.to) register_table(*ast.to, out.result);
  return out;
}

std::string format_table_text(const Table& table) {
  std::vector<std::size_t> widths(table.num_columns());
  for (std::size_t j = 0; j < table.num_columns(); ++j)
    widths[j] = table.schema().at(j).name.size();
  std::vector<std::vector<std::string>> cells(table.num_rows());
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    cells[i].resize(table.num_columns());
    for (std::size_t j = 0; j < table.num_columns(); ++j) {
      cells[i][j] = table.cell(i, j).render();
      if (cells[i][j].size() > 60) cells[i][j] = cells[i][j].substr(0, 57) + "...";
      widths[j] = std::max(widths[j], cells[i][j].size());
    }
  }
  std::ostringstream out;
  for (std::size_t j = 0; j < table.num_columns(); ++j) {
    out << (j ? "  " : "");
    out << table.schema().at(j).name
        << std::string(widths[j] - table.schema().at(j).name.size(), ' ');
  }
  out << "\n";
  for (std::size_t j = 0; j < table.num_columns(); ++j)
    out << (j ? "  " : "") << std::string(widths[j], '-');
  out << "\n";
  for (const auto& row : cells) {
    for (std::size_t j = 0; j < row.size(); ++j)
      out << (j ? "  " : "") << row[j] << std::string(widths[j] - row[j].size(), ' ');
    out << "\n";
  }
  return out.str();
}

std::string format_table_json(const Table& table) {
  using nlohmann::json;
  json rows = json::array();
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    json row = json::object();
    for (std::size_t j = 0; j < table.num_columns(); ++j) {
      const Value& v = table.cell(i, j);
      const std::string& name = table.schema().at(j).name;
      if (v.is_null())
        row[name] = nullptr;
      else if (v.type() == ValueType::Integer)
        row[name] = v.as_integer();
      else if (v.type() == ValueType::Float)
        row[name] = v.as_float();
      else
        row[name] = v.render();
    }
    rows.push_back(std::move(row));
  }
  return rows.dump(2);
}

std::string format_table_csv(const Table& table) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += "\"\"";
      else out.push_back(c);
    }
    out += "\"";
    return out;
  };
  std::string out;
  for (std::size_t j = 0; j < table.num_columns(); ++j)
    out += (j ? "," : "") + quote(table.schema().at(j).name);
  out += "\n";
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    for (std::size_t j = 0; j < table.num_columns(); ++j)
      out += (j ? "," : "") + quote(table.cell(i, j).render());
    out += "\n";
  }
  return out;
}

std::string explain_plans(const std::vector<Plan>& plans, const Plan& chosen) {
  std::string out = "candidate plans:\n";
  for (const auto& plan : plans) {
    bool is_chosen = plan.describe() == chosen.describe();
    out += is_chosen ? "  * " : "    ";
    out += plan.describe();
    out += "\n";
  }
  out += "selected: " + chosen.describe() + "\n";
  return out;
}

}  // namespace uqe
