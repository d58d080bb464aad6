#include "uqe/learn/logistic.hpp"

#include <cmath>

namespace uqe {

double Surrogate::score(const float* x, std::size_t d) const {
  double z = bias;
  for (std::size_t j = 0; j < d; ++j) z += weights[j] * x[j];
  return 1.0 / (1.0 + std::exp(-z));
}

namespace {

double margin(const LogisticProblem& p, const std::vector<double>& w, double b,
              std::size_t k) {
  const float* x = p.embeddings->row(p.rows[k]);
  double z = b;
  for (std::size_t j = 0; j < p.embeddings->d; ++j) z += w[j] * x[j];
  return z;
}

double log1p_exp(double t) {
  // numerically stable log(1 + e^t)
  return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

}  // namespace

double logistic_loss(const LogisticProblem& p, const std::vector<double>& w, double b) {
  double loss = 0.0;
  for (std::size_t k = 0; k < p.rows.size(); ++k) {
    double y = p.labels[k] ? 1.0 : -1.0;
    loss += log1p_exp(-y * margin(p, w, b, k));
  }
  double penalty = 0.0;
  for (double wj : w) penalty += wj * wj;
  return loss + 0.5 * p.lambda * penalty;
}

// residual r_k = -y_k * sigmoid(-y_k z_k); grad_w = X^T r + lambda w.
// Residuals are computed elementwise and the per-feature sums run over the
// samples in index order, so the result does not depend on thread count.
static void gradient_impl(const LogisticProblem& p, const std::vector<double>& w, double b,
                          std::vector<double>& grad, bool parallel) {
  const std::size_t n = p.rows.size();
  const std::size_t d = p.embeddings->d;
  grad.assign(d + 1, 0.0);
  std::vector<double> residual(n);

  const std::int64_t nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t k = 0; k < nn; ++k) {
    double y = p.labels[k] ? 1.0 : -1.0;
    double z = margin(p, w, b, k);
    residual[k] = -y / (1.0 + std::exp(y * z));
  }

  const std::int64_t dd = static_cast<std::int64_t>(d);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t j = 0; j < dd; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      acc += residual[k] * p.embeddings->row(p.rows[k])[j];
    grad[j] = acc + p.lambda * w[j];
  }
  double bias_acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) bias_acc += residual[k];
  grad[d] = bias_acc;
}

void logistic_gradient(const LogisticProblem& p, const std::vector<double>& w, double b,
                       std::vector<double>& grad) {
  gradient_impl(p, w, b, grad, true);
}

namespace serial {
void logistic_gradient(const LogisticProblem& p, const std::vector<double>& w, double b,
                       std::vector<double>& grad) {
  gradient_impl(p, w, b, grad, false);
}
}  // namespace serial

Surrogate fit_logistic(const LogisticProblem& p, FitReport* report) {
  const std::size_t d = p.embeddings->d;
  Surrogate model;
  model.lambda = p.lambda;
  model.weights.assign(d, 0.0);
  model.bias = 0.0;

  std::vector<double> grad;
  double loss = logistic_loss(p, model.weights, model.bias);
  if (report) report->loss_trace.push_back(loss);

  int iter = 0;
  double grad_norm = 0.0;
  for (; iter < 500; ++iter) {
    logistic_gradient(p, model.weights, model.bias, grad);
    grad_norm = 0.0;
    for (double g : grad) grad_norm += g * g;
    grad_norm = std::sqrt(grad_norm);
    if (grad_norm < 1e-6) break;

    // backtracking Armijo line search along -grad
    double step = 1.0;
    std::vector<double> trial_w(d);
    double trial_b = 0.0;
    bool accepted = false;
    for (int half = 0; half < 40; ++half) {
      for (std::size_t j = 0; j < d; ++j) trial_w[j] = model.weights[j] - step * grad[j];
      trial_b = model.bias - step * grad[d];
      double trial_loss = logistic_loss(p, trial_w, trial_b);
      if (trial_loss <= loss - 1e-4 * step * grad_norm * grad_norm) {
        model.weights.swap(trial_w);
        model.bias = trial_b;
        loss = trial_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (report) report->loss_trace.push_back(loss);
    if (!accepted) break;  // no descent step at machine precision
  }
  if (report) {
    report->iterations = iter;
    report->final_grad_norm = grad_norm;
  }
  model.trained = true;
  return model;
}

static void scores_impl(const Surrogate& s, const EmbeddingMatrix& emb,
                        std::vector<double>& out, bool parallel) {
  out.resize(emb.n);
  const std::int64_t n = static_cast<std::int64_t>(emb.n);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t i = 0; i < n; ++i) out[i] = s.score(emb.row(i), emb.d);
}

void surrogate_scores(const Surrogate& s, const EmbeddingMatrix& emb,
                      std::vector<double>& out) {
  scores_impl(s, emb, out, true);
}

namespace serial {
void surrogate_scores(const Surrogate& s, const EmbeddingMatrix& emb,
                      std::vector<double>& out) {
  scores_impl(s, emb, out, false);
}
}  // namespace serial

}  // namespace uqe
