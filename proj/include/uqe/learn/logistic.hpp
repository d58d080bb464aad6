#pragma once

#include <cstdint>
#include <vector>

#include "uqe/embed/embedding.hpp"

namespace uqe {

/// L2-regularized linear logistic model over row embeddings. Until the
/// labeled set holds both a positive and a negative example the surrogate
/// stays untrained and scores rows by a seeded uniform draw in [0, 1).
struct Surrogate {
  std::vector<double> weights;  // d, zero-initialized
  double bias = 0.0;
  bool trained = false;
  double lambda = 1.0;

  double score(const float* x, std::size_t d) const;
};

struct LogisticProblem {
  const EmbeddingMatrix* embeddings = nullptr;
  std::vector<std::size_t> rows;  // labeled row indices
  std::vector<char> labels;       // 1 positive, 0 negative
  double lambda = 1.0;
};

/// Loss: sum_i log(1 + exp(-y_i z_i)) + lambda/2 * ||w||^2, bias excluded
/// from the penalty. Gradient layout: d weight components then bias.
double logistic_loss(const LogisticProblem& problem, const std::vector<double>& weights,
                     double bias);
void logistic_gradient(const LogisticProblem& problem, const std::vector<double>& weights,
                       double bias, std::vector<double>& grad);

struct FitReport {
  int iterations = 0;
  double final_grad_norm = 0.0;
  std::vector<double> loss_trace;
};

/// Gradient descent with backtracking line search; stops at grad norm below
/// 1e-6 or 500 iterations. Deterministic: same labels and embeddings give
/// identical weights.
Surrogate fit_logistic(const LogisticProblem& problem, FitReport* report = nullptr);

/// Scores every row, OpenMP-parallel; deterministic per row.
void surrogate_scores(const Surrogate& surrogate, const EmbeddingMatrix& embeddings,
                      std::vector<double>& out);

namespace serial {
/// Reference implementations kept for testing; bit-identical to the
/// OpenMP paths.
void logistic_gradient(const LogisticProblem& problem, const std::vector<double>& weights,
                       double bias, std::vector<double>& grad);
void surrogate_scores(const Surrogate& surrogate, const EmbeddingMatrix& embeddings,
                      std::vector<double>& out);
}  // namespace serial

}  // namespace uqe
