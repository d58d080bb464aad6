#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "uqe/embed/kmeans.hpp"
#include "uqe/oracle/oracle.hpp"
#include "uqe/table.hpp"

namespace uqe {

/// Probability distribution over row indices; normalized within 1e-12.
struct Proposal {
  std::vector<double> probabilities;

  void check() const;
};

/// Per-stratum sample allocation for budget B over a clustering.
struct SamplePlan {
  std::size_t budget = 0;
  std::vector<std::size_t> per_stratum;  // n_k, sums to min(B, N)
  std::uint64_t seed = 0;

  void check(const std::vector<std::size_t>& stratum_sizes) const;
};

/// Proportional allocation with a per-stratum minimum of one, adjusted to
/// sum to B by largest remainder. n_k never exceeds the stratum size.
std::vector<std::size_t> allocate_stratified(const std::vector<std::size_t>& stratum_sizes,
                                             std::size_t budget);

/// Allocation plus the seed the draw will use.
SamplePlan plan_stratified(const Clustering& clustering, std::size_t budget,
                           std::uint64_t seed);

/// B distinct indices uniform without replacement; every weight is N/B.
StochasticTable uniform_sample(const Table& table, std::size_t budget, std::uint64_t seed);

/// Stratified sampling over embedding clusters with weights
/// w_i = |C_c(i)| / n_c(i). When the budget cannot cover one row per
/// nonempty stratum, falls back to uniform sampling and reports a warning.
StochasticTable stratified_sample(const Table& table, const Clustering& clustering,
                                  std::size_t budget, std::uint64_t seed,
                                  std::string* warning = nullptr);

struct AggSpec {
  AggOp op = AggOp::Count;
  std::optional<std::string> column;  // SUM/AVG operand
};

/// Judges each sampled row exactly once and returns the self-normalized
/// estimate: COUNT = N * (sum w_i f_i) / (sum w_j); SUM analogous with
/// f_i * value_i; AVG is the ratio estimator over satisfying mass and
/// returns nullopt when no sampled row satisfies the condition.
std::optional<double> estimate(const StochasticTable& st, const Condition& cond,
                               OracleBackend& oracle, const AggSpec& agg,
                               int parallelism = 8);

/// Variance-optimal proposal p_i proportional to f_i; needs an exact oracle
/// and a full scan, so it serves as a test-harness reference only.
Proposal optimal_proposal(const Table& table, const Condition& cond, OracleBackend& oracle);

/// One i.i.d. index draw from a proposal.
std::size_t draw_from_proposal(const Proposal& proposal, std::mt19937_64& rng);

/// Judges `rows` of `table` against `cond`, fanning out over at most
/// `parallelism` threads; result[k] corresponds to rows[k].
std::vector<char> batch_judge(OracleBackend& oracle, const Table& table,
                              const std::vector<std::size_t>& rows, const Condition& cond,
                              int parallelism);

}  // namespace uqe
