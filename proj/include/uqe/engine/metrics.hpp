#pragma once

#include <cstddef>
#include <string>
#include <unordered_set>
#include <vector>

#include "uqe/embed/embedding.hpp"

namespace uqe {

/// |predicted - truth| / truth; truth must be nonzero.
double eval_relative_error(double predicted, double truth);

/// Harmonic mean of precision and recall over index sets. Both empty -> 1;
/// retrieved empty with relevant nonempty -> 0.
double eval_f1(const std::unordered_set<std::size_t>& retrieved,
               const std::unordered_set<std::size_t>& relevant);

struct LabeledCount {
  std::string label;
  double count = 0.0;
};

/// Exact optimal-transport cost between two normalized label histograms.
/// The ground cost between two labels is one minus the cosine similarity of
/// their text embeddings (identical label strings cost exactly zero). Solved
/// exactly for small histograms (<= 32 labels per side).
double eval_emd(const std::vector<LabeledCount>& predicted,
                const std::vector<LabeledCount>& truth, EmbeddingProvider& label_embedder);

/// Exact min-cost transport between histograms `supply` and `demand`
/// (equal positive totals) under cost matrix `cost[i][j]`, by successive
/// shortest augmenting paths.
double solve_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                       const std::vector<std::vector<double>>& cost);

}  // namespace uqe
