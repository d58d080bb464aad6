#pragma once

#include "uqe/plan/executor.hpp"

namespace uqe {

/// Textbook evaluator: scans every row, applies WHERE with the exact oracle,
/// then GROUP BY (taxonomy from the canonical probe-order sample),
/// aggregation, ORDER BY and LIMIT in order. No sampling, no budget, no plan.
/// Serves as the oracle of record for plan-equivalence tests and backs the
/// CLI's --exact flag.
Table reference_evaluate(const uql::QueryAst& ast, const Table& table,
                         const SemanticBinding& binding, OracleBackend& oracle,
                         std::size_t taxonomy_budget, std::uint64_t seed);

}  // namespace uqe
