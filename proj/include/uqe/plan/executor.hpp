#pragma once

#include "uqe/embed/embedding.hpp"
#include "uqe/learn/search.hpp"
#include "uqe/oracle/oracle.hpp"
#include "uqe/plan/planner.hpp"

namespace uqe {

struct ExecConfig {
  std::size_t aggregation_budget = 128;
  std::size_t retrieval_budget = 256;
  std::size_t taxonomy_budget = 16;
  std::size_t batch_size = 16;
  std::size_t clusters = 10;
  int parallelism = 8;
  std::uint64_t seed = 0;
  bool exact = false;  // bypass sampling/search, full scan
  double selectivity_prior = 0.5;
};

struct Diagnostics {
  double estimated_cost = 0.0;
  MeterSnapshot oracle_usage;  // metered delta for this query
  std::optional<double> standard_error;
  std::vector<TracePoint> recall_trace;
  std::size_t unmapped_rows = 0;
  std::vector<std::string> warnings;
  std::vector<std::size_t> source_rows;  // non-aggregation: result row -> base row
  bool aborted = false;
  std::string error;
};

struct QueryOutput {
  Table result;
  Diagnostics diagnostics;
};

/// Runs a bound plan. The oracle meter delta, estimator standard error,
/// recall trace and unmapped-classification count land in the diagnostics.
QueryOutput execute_plan(const Plan& plan, const uql::QueryAst& ast, const Table& table,
                         const SemanticBinding& binding, OracleBackend& oracle,
                         EmbeddingProvider& embedder, EmbeddingCache* cache,
                         const ExecConfig& config);

/// Schema-dependent validation run before planning: column existence,
/// ORDER BY restrictions, select-item rules per query class.
void validate_query(const uql::QueryAst& ast, const Schema& schema);

/// Full-DNF evaluation of a residual (semantic-only) formula for one row;
/// judges each distinct predicate text at most once.
bool evaluate_residual(const uql::DnfFormula& residual, const RowRef& row,
                       OracleBackend& oracle, const SemanticBinding& binding);

/// Canonical row ordering used when comparing result tables.
std::vector<std::string> canonical_rows(const Table& table);

}  // namespace uqe
