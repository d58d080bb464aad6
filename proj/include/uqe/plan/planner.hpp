#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uqe/table.hpp"
#include "uqe/uql/ast.hpp"

namespace uqe {

/// Cardinalities the cost model works from. `structured_true` rows pass the
/// WHERE formula on structured predicates alone, `residual_rows` still need
/// the oracle, the rest are excluded for free.
struct TableStats {
  std::size_t total_rows = 0;
  std::size_t structured_true = 0;
  std::size_t structured_false = 0;
  std::size_t residual_rows = 0;

  std::size_t candidates() const { return structured_true + residual_rows; }
};

struct BudgetConfig {
  std::size_t aggregation_budget = 128;
  std::size_t retrieval_budget = 256;
  std::size_t taxonomy_budget = 16;
  double selectivity_prior = 0.5;  // FusedWhereLimit cost prior
};

enum class KernelKind {
  Select,
  Where,
  GroupBy,
  OrderBy,
  Limit,
  FusedWhereLimit,
  FusedSelectGroupBy,
  FusedGroupByWhere,
};

const char* kernel_kind_name(KernelKind kind);

/// One execution unit. Clause fragments are attached to exactly one kernel
/// of the plan.
struct Kernel {
  KernelKind kind = KernelKind::Select;
  std::optional<uql::DnfFormula> where;       // Where / fused variants
  std::vector<uql::GroupByKey> group_keys;    // GroupBy / fused variants
  std::vector<std::string> extract_attributes;  // Select: semantic extractions
  std::optional<std::int64_t> limit;          // Limit / FusedWhereLimit
  std::optional<uql::OrderByClause> order_by;
  double estimated_cost = 0.0;
};

struct Plan {
  std::vector<Kernel> kernels;
  double total_estimated_cost = 0.0;
  uql::QueryClass query_class = uql::QueryClass::NonAggregation;

  std::string describe() const;
};

/// Expected oracle row-units for one kernel given the stats; mirrors the
/// execution strategy the executor uses per kind.
double estimate_cost(const Kernel& kernel, const TableStats& stats,
                     const BudgetConfig& budgets, uql::QueryClass query_class);

/// All candidate kernel orderings and fusions consistent with the semantic
/// ordering constraints, costs attached.
std::vector<Plan> enumerate_plans(const uql::QueryAst& ast, uql::QueryClass query_class,
                                  const TableStats& stats, const BudgetConfig& budgets);

/// Minimum-cost plan; ties break by fewer kernels, then by the
/// lexicographic sequence of kernel kind names.
Plan select_plan(const std::vector<Plan>& plans);

/// Exact structured-predicate evaluation; null cells make a predicate false.
bool evaluate_structured_predicate(const uql::Predicate& pred, const Table& table,
                                   std::size_t row);

enum class SimplifyOutcome { True, False, Residual };

struct SimplifiedDnf {
  SimplifyOutcome outcome = SimplifyOutcome::Residual;
  uql::DnfFormula residual;  // semantic predicates only, valid when Residual
};

/// Evaluates the structured predicates of a DNF against one row: false
/// structured predicates drop their conjunction, true ones vanish from it;
/// an emptied conjunction makes the whole formula true for the row.
SimplifiedDnf simplify_dnf(const uql::DnfFormula& formula, const Table& table,
                           std::size_t row);

/// Structured-only classification of every row.
TableStats compute_stats(const Table& table, const std::optional<uql::DnfFormula>& where);

/// Explicit or schema-derived source column per semantic fragment.
struct SemanticBinding {
  std::map<std::string, std::string> source_by_text;

  const std::string& source_for(const std::string& text) const;
};

/// Resolves the source column for every semantic fragment of the plan.
/// Fragments without an explicit binding resolve to the single unstructured
/// column; with several candidates the error names them all.
SemanticBinding bind_plan(const Plan& plan, const uql::QueryAst& ast, const Schema& schema,
                     const std::map<std::string, std::string>& explicit_bindings);

/// Seeded probe permutation shared by the engine and the reference
/// evaluator: the canonical taxonomy sample is the first `taxonomy_budget`
/// satisfying rows in this order.
std::vector<std::size_t> taxonomy_probe_order(std::size_t n, std::uint64_t seed);

}  // namespace uqe
