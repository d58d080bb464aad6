#pragma once

#include <functional>
#include <optional>
#include <string>

#include "uqe/learn/logistic.hpp"
#include "uqe/oracle/oracle.hpp"
#include "uqe/sample/sampler.hpp"

namespace uqe {

struct SearchConfig {
  std::size_t budget = 256;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  int parallelism = 8;
  /// Early stop once this many positives are found (WHERE + LIMIT fusion).
  std::optional<std::size_t> stop_after_positives;
  /// Exploration noise scale; 0 disables it. When set, the per-row noise is
  /// Gaussian with sigma * decay^t at step t.
  double exploration_sigma = 0.0;
  double exploration_decay = 0.9;
};

struct TracePoint {
  std::size_t step = 0;
  std::size_t cumulative_positives = 0;
  std::size_t cumulative_calls = 0;
};

struct SearchState {
  std::vector<std::size_t> labeled;  // acquisition order
  std::vector<char> labels;
  std::size_t budget = 0;
  std::size_t batch_size = 0;
  std::size_t step = 0;
  std::vector<TracePoint> trace;  // cumulative positives are non-decreasing
  Surrogate surrogate;
  bool aborted = false;
  std::string error;

  std::size_t positives_found() const;
};

struct SearchOutcome {
  std::vector<std::size_t> positives;  // ascending row indices
  SearchState state;
};

/// The `batch_size` unlabeled candidates with the highest score; ties break
/// toward the lower row index.
std::vector<std::size_t> acquire_batch(const std::vector<double>& scores,
                                       const std::vector<bool>& labeled_mask,
                                       const std::vector<std::size_t>& candidates,
                                       std::size_t batch_size);

/// Budgeted retrieval by online active learning: score unlabeled rows with
/// the surrogate (seeded uniform scores until it can be trained), label the
/// top batch through `label_row`, refit, repeat while the budget lasts.
/// `label_row` must be safe to call concurrently. Labeling failures abort
/// the search with the partial state preserved in the outcome.
SearchOutcome search_with(const std::vector<std::size_t>& candidates,
                          const std::function<char(std::size_t)>& label_row,
                          const EmbeddingMatrix& embeddings, const SearchConfig& config);

/// Single-condition convenience wrapper over an oracle backend.
SearchOutcome search(const Table& table, const Condition& cond, OracleBackend& oracle,
                     const EmbeddingMatrix& embeddings, const SearchConfig& config);

/// Writes "step,cumulative_positives,cumulative_calls" CSV.
std::string trace_to_csv(const std::vector<TracePoint>& trace);

}  // namespace uqe
