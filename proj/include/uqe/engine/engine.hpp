#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "uqe/engine/reference.hpp"
#include "uqe/oracle/llm_http.hpp"
#include "uqe/plan/executor.hpp"

namespace uqe {

struct EngineConfig {
  // oracle backend
  std::string oracle_kind = "mock";  // mock | llm-http
  MockSpec mock;
  LlmHttpConfig llm;

  // embedding provider
  std::string embedding_provider = "hash";  // hash | http
  std::size_t embedding_dimension = 64;
  HttpEmbeddingConfig embedding_http;

  // budgets and knobs (defaults per the engine's standard configuration)
  std::size_t clusters = 10;
  std::size_t aggregation_budget = 128;
  std::size_t retrieval_budget = 256;
  std::size_t taxonomy_budget = 16;
  std::size_t batch_size = 16;
  int parallelism = 8;
  std::uint64_t seed = 0;
  double selectivity_prior = 0.5;
  std::string cache_dir;  // empty: no embedding cache

  /// semantic fragment text -> source column
  std::map<std::string, std::string> column_bindings;

  void check() const;
};

/// key = value lines; '#' comments. Unknown keys are rejected.
EngineConfig load_config(const std::string& path);
void apply_config_line(EngineConfig& config, const std::string& key,
                       const std::string& value);

struct QueryResult {
  Table result;
  Diagnostics diagnostics;
  Plan chosen_plan;
  std::vector<Plan> candidate_plans;
  std::string explain_text;  // stable --explain rendering
};

/// Holds ingested tables and TO-named results for the lifetime of a session.
class Session {
 public:
  explicit Session(EngineConfig config);

  void register_table(const std::string& name, Table table);
  const Table& table(const std::string& name) const;
  bool has_table(const std::string& name) const;
  std::vector<std::string> table_names() const;

  /// parse -> validate -> plan -> bind -> execute. `exact` forces the
  /// brute-force reference path; budget/seed override the config when set.
  QueryResult run_query(const std::string& uql, bool exact = false,
                        std::optional<std::size_t> budget = std::nullopt,
                        std::optional<std::uint64_t> seed = std::nullopt);

  OracleBackend& oracle() { return *oracle_; }
  EmbeddingProvider& embedder() { return *embedder_; }
  const EngineConfig& config() const { return config_; }

 private:
  EngineConfig config_;
  std::unique_ptr<OracleBackend> oracle_;
  std::unique_ptr<EmbeddingProvider> embedder_;
  std::unique_ptr<EmbeddingCache> cache_;
  std::map<std::string, Table> tables_;
};

/// Aligned-text / json / csv result rendering.
std::string format_table_text(const Table& table);
std::string format_table_json(const Table& table);
std::string format_table_csv(const Table& table);

/// "--explain" rendering: every candidate with costs, the chosen one marked.
std::string explain_plans(const std::vector<Plan>& plans, const Plan& chosen);

}  // namespace uqe
