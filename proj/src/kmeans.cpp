#include "uqe/embed/kmeans.hpp"

#include <cassert>
#include <cmath>
#include <limits>
#include <random>

namespace uqe {

void Clustering::check(std::size_t n) const {
  if (assignment.size() != n)
    throw Error("execute", "invalid-clustering", "assignment size mismatch");
  std::size_t total = 0;
  for (std::size_t s : sizes) {
    if (s == 0) throw Error("execute", "invalid-clustering", "empty cluster");
    total += s;
  }
  if (total != n)
    throw Error("execute", "invalid-clustering", "cluster sizes do not sum to row count");
}

namespace {

double sq_dist(const float* x, const double* c, std::size_t d) {
  double acc = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double diff = static_cast<double>(x[j]) - c[j];
    acc += diff * diff;
  }
  return acc;
}

std::size_t nearest(const float* x, const std::vector<double>& centroids, std::size_t k,
                    std::size_t d, double* dist_out = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    double dd = sq_dist(x, centroids.data() + c * d, d);
    if (dd < best_d) {
      best_d = dd;
      best = c;
    }
  }
  if (dist_out) *dist_out = best_d;
  return best;
}

}  // namespace

void assign_clusters(const EmbeddingMatrix& emb, const std::vector<double>& centroids,
                     std::size_t k, std::vector<std::size_t>& assignment) {
  assignment.resize(emb.n);
  const std::int64_t n = static_cast<std::int64_t>(emb.n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    assignment[i] = nearest(emb.row(i), centroids, k, emb.d);
}

namespace serial {

void assign_clusters(const EmbeddingMatrix& emb, const std::vector<double>& centroids,
                     std::size_t k, std::vector<std::size_t>& assignment) {
  assignment.resize(emb.n);
  for (std::size_t i = 0; i < emb.n; ++i)
    assignment[i] = nearest(emb.row(i), centroids, k, emb.d);
}

}  // namespace serial

Clustering cluster(const EmbeddingMatrix& emb, std::size_t k, std::uint64_t seed) {
  const std::size_t n = emb.n;
  const std::size_t d = emb.d;
  if (n == 0) throw Error("execute", "invalid-clustering", "cannot cluster an empty table");
  if (k < 1) k = 1;
  if (k > n) k = n;

  std::mt19937_64 rng(seed);

  // k-means++ seeding; D^2 weights recomputed incrementally. Runs out of
  // distinct points -> fewer centers.
  std::vector<double> centroids;
  centroids.reserve(k * d);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t c0 = first(rng);
  for (std::size_t j = 0; j < d; ++j) centroids.push_back(emb.row(c0)[j]);

  std::vector<double> min_d2(n);
  std::size_t chosen = 1;
  while (chosen < k) {
    const std::int64_t nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < nn; ++i)
      nearest(emb.row(i), centroids, chosen, d, &min_d2[i]);
    double total = 0.0;
    for (double v : min_d2) total += v;
    if (!(total > 0.0)) break;  // every point coincides with a center
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    std::size_t pick = n - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += min_d2[i];
      if (acc >= target) {
        pick = i;
        break;
      }
    }
    for (std::size_t j = 0; j < d; ++j) centroids.push_back(emb.row(pick)[j]);
    ++chosen;
  }
  std::size_t kk = chosen;

  std::vector<std::size_t> assignment(n);
  std::vector<double> sums(kk * d);
  std::vector<std::size_t> counts(kk);
  double prev_objective = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < 100; ++iter) {
    assign_clusters(emb, centroids, kk, assignment);

#ifndef NDEBUG
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      objective += sq_dist(emb.row(i), centroids.data() + assignment[i] * d, d);
    assert(objective <= prev_objective + 1e-9 * (1.0 + std::abs(prev_objective)));
    prev_objective = objective;
#else
    (void)prev_objective;
#endif

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = assignment[i];
      ++counts[c];
      const float* x = emb.row(i);
      double* s = sums.data() + c * d;
      for (std::size_t j = 0; j < d; ++j) s[j] += x[j];
    }

    double shift = 0.0;
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] == 0) continue;  // handled after convergence
      double move = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double nc = sums[c * d + j] / static_cast<double>(counts[c]);
        double diff = nc - centroids[c * d + j];
        move += diff * diff;
        centroids[c * d + j] = nc;
      }
      shift = std::max(shift, std::sqrt(move));
    }
    if (shift < 1e-6) break;
  }

  assign_clusters(emb, centroids, kk, assignment);
  std::fill(counts.begin(), counts.end(), 0);
  for (std::size_t c : assignment) ++counts[c];

  // drop empty clusters and renumber
  std::vector<std::size_t> remap(kk, 0);
  Clustering out;
  for (std::size_t c = 0; c < kk; ++c) {
    if (counts[c] == 0) continue;
    remap[c] = out.k++;
    for (std::size_t j = 0; j < d; ++j) out.centroids.push_back(centroids[c * d + j]);
    out.sizes.push_back(counts[c]);
  }
  out.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.assignment[i] = remap[assignment[i]];
  out.check(n);
  return out;
}

}  // namespace uqe
