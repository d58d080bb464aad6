#include "uqe/sample/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace uqe {

void Proposal::check() const {
  double total = 0.0;
  for (double p : probabilities) {
    if (p < 0.0) throw Error("execute", "invalid-proposal", "negative proposal probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw Error("execute", "invalid-proposal", "proposal does not sum to one");
}

namespace {

// first `take` elements of a seeded partial Fisher-Yates over `pool`
std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t> pool,
                                                  std::size_t take, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(take);
  return pool;
}

}  // namespace

StochasticTable uniform_sample(const Table& table, std::size_t budget, std::uint64_t seed) {
  const std::size_t n = table.num_rows();
  if (budget < 1 || budget > n)
    throw Error("execute", "budget-out-of-range",
                "budget " + std::to_string(budget) + " outside [1, " + std::to_string(n) + "]");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  auto indices = draw_without_replacement(std::move(pool), budget, rng);
  std::sort(indices.begin(), indices.end());
  std::vector<double> weights(budget,
                              static_cast<double>(n) / static_cast<double>(budget));
  return StochasticTable(table, std::move(indices), std::move(weights), n);
}

std::vector<std::size_t> allocate_stratified(const std::vector<std::size_t>& stratum_sizes,
                                             std::size_t budget) {
  const std::size_t k = stratum_sizes.size();
  const std::size_t n = std::accumulate(stratum_sizes.begin(), stratum_sizes.end(),
                                        std::size_t{0});
  if (budget < k || budget > n)
    throw Error("execute", "budget-out-of-range", "allocation budget infeasible");

  std::vector<double> quota(k);
  std::vector<std::size_t> alloc(k);
  for (std::size_t c = 0; c < k; ++c) {
    quota[c] = static_cast<double>(budget) * static_cast<double>(stratum_sizes[c]) /
               static_cast<double>(n);
    alloc[c] = std::min(stratum_sizes[c],
                        std::max<std::size_t>(1, static_cast<std::size_t>(quota[c])));
  }
  auto total = [&] { return std::accumulate(alloc.begin(), alloc.end(), std::size_t{0}); };
  while (total() < budget) {
    std::size_t best = k;
    double best_rem = -1.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (alloc[c] >= stratum_sizes[c]) continue;
      double rem = quota[c] - static_cast<double>(alloc[c]);
      if (rem > best_rem) {
        best_rem = rem;
        best = c;
      }
    }
    ++alloc[best];
  }
  while (total() > budget) {
    std::size_t best = k;
    double best_rem = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (alloc[c] <= 1) continue;
      double rem = quota[c] - static_cast<double>(alloc[c]);
      if (rem < best_rem) {
        best_rem = rem;
        best = c;
      }
    }
    --alloc[best];
  }
  return alloc;
}

void SamplePlan::check(const std::vector<std::size_t>& stratum_sizes) const {
  if (per_stratum.size() != stratum_sizes.size())
    throw Error("execute", "invalid-sample", "allocation arity mismatch");
  std::size_t total = 0;
  for (std::size_t c = 0; c < per_stratum.size(); ++c) {
    if (stratum_sizes[c] > 0 && per_stratum[c] < 1)
      throw Error("execute", "invalid-sample", "nonempty stratum got no samples");
    if (per_stratum[c] > stratum_sizes[c])
      throw Error("execute", "invalid-sample", "allocation exceeds stratum size");
    total += per_stratum[c];
  }
  if (total != budget)
    throw Error("execute", "invalid-sample", "allocation does not sum to the budget");
}

SamplePlan plan_stratified(const Clustering& clustering, std::size_t budget,
                           std::uint64_t seed) {
  SamplePlan plan;
  plan.budget = budget;
  plan.seed = seed;
  plan.per_stratum = allocate_stratified(clustering.sizes, budget);
  plan.check(clustering.sizes);
  return plan;
}

StochasticTable stratified_sample(const Table& table, const Clustering& clustering,
                                  std::size_t budget, std::uint64_t seed,
                                  std::string* warning) {
  const std::size_t n = table.num_rows();
  if (budget < 1 || budget > n)
    throw Error("execute", "budget-out-of-range",
                "budget " + std::to_string(budget) + " outside [1, " + std::to_string(n) + "]");
  if (budget < clustering.k) {
    if (warning)
      *warning = "budget " + std::to_string(budget) + " below stratum count " +
                 std::to_string(clustering.k) + "; falling back to uniform sampling";
    return uniform_sample(table, budget, seed);
  }

  auto plan = plan_stratified(clustering, budget, seed);

  std::vector<std::vector<std::size_t>> members(clustering.k);
  for (std::size_t i = 0; i < n; ++i) members[clustering.assignment[i]].push_back(i);

  std::mt19937_64 rng(plan.seed);
  std::vector<std::pair<std::size_t, double>> picked;
  picked.reserve(budget);
  for (std::size_t c = 0; c < clustering.k; ++c) {
    auto chosen = draw_without_replacement(members[c], plan.per_stratum[c], rng);
    const double w = static_cast<double>(clustering.sizes[c]) /
                     static_cast<double>(plan.per_stratum[c]);
    for (std::size_t idx : chosen) picked.emplace_back(idx, w);
  }
  std::sort(picked.begin(), picked.end());
  std::vector<std::size_t> indices(picked.size());
  std::vector<double> weights(picked.size());
  for (std::size_t i = 0; i < picked.size(); ++i) {
    indices[i] = picked[i].first;
    weights[i] = picked[i].second;
  }
  return StochasticTable(table, std::move(indices), std::move(weights), n);
}

std::vector<char> batch_judge(OracleBackend& oracle, const Table& table,
                              const std::vector<std::size_t>& rows, const Condition& cond,
                              int parallelism) {
  std::vector<char> verdicts(rows.size(), 0);
  std::exception_ptr failure;
  const std::int64_t n = static_cast<std::int64_t>(rows.size());
#ifdef _OPENMP
  int threads = std::max(1, std::min<int>(parallelism, static_cast<int>(rows.size())));
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (std::int64_t k = 0; k < n; ++k) {
    try {
      verdicts[k] = oracle.judge(RowRef{&table, rows[k]}, cond) ? 1 : 0;
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      {
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  return verdicts;
}

std::optional<double> estimate(const StochasticTable& st, const Condition& cond,
                               OracleBackend& oracle, const AggSpec& agg, int parallelism) {
  if (st.sample_size() == 0)
    throw Error("execute", "empty-sample", "estimate over an empty sample");
  auto verdicts = batch_judge(oracle, st.base(), st.sample_indices(), cond, parallelism);

  std::unordered_map<std::size_t, std::size_t> position;
  position.reserve(st.sample_size());
  for (std::size_t k = 0; k < st.sample_size(); ++k) position[st.sample_indices()[k]] = k;

  auto operand = [&](std::size_t base_idx) -> double {
    const auto& schema = st.base().schema();
    auto j = schema.index_of(*agg.column);
    if (!j)
      throw Error("execute", "unknown-column", "unknown column '" + *agg.column + "'");
    const Value& v = st.base().cell(base_idx, *j);
    if (!v.is_numeric())
      throw Error("execute", "type-mismatch",
                  "aggregation operand '" + *agg.column + "' is not numeric");
    return v.as_float();
  };

  switch (agg.op) {
    case AggOp::Count:
      return weighted_aggregate(st, AggOp::Count, [&](std::size_t idx) {
        return verdicts[position.at(idx)] ? 1.0 : 0.0;
      });
    case AggOp::Sum:
      return weighted_aggregate(st, AggOp::Sum, [&](std::size_t idx) {
        return verdicts[position.at(idx)] ? operand(idx) : 0.0;
      });
    case AggOp::Avg: {
      std::vector<bool> keep(st.sample_size());
      bool any = false;
      for (std::size_t k = 0; k < st.sample_size(); ++k) {
        keep[k] = verdicts[k] != 0;
        any = any || keep[k];
      }
      if (!any) return std::nullopt;
      auto satisfying = st.filtered(keep);
      return weighted_aggregate(satisfying, AggOp::Avg, operand);
    }
  }
  return std::nullopt;
}

Proposal optimal_proposal(const Table& table, const Condition& cond, OracleBackend& oracle) {
  Proposal p;
  p.probabilities.resize(table.num_rows(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    bool f = oracle.judge(RowRef{&table, i}, cond);
    p.probabilities[i] = f ? 1.0 : 0.0;
    total += p.probabilities[i];
  }
  if (total == 0.0)
    throw Error("execute", "no-satisfying-rows",
                "optimal proposal undefined: no row satisfies the condition");
  for (double& v : p.probabilities) v /= total;
  return p;
}

std::size_t draw_from_proposal(const Proposal& proposal, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double target = u(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < proposal.probabilities.size(); ++i) {
    acc += proposal.probabilities[i];
    if (target <= acc) return i;
  }
  return proposal.probabilities.size() - 1;
}

}  // namespace uqe
