#pragma once

#include <cstdint>
#include <vector>

#include "uqe/embed/embedding.hpp"

namespace uqe {

/// Disjoint partition of table rows produced by k-means over row embeddings.
/// Every cluster is nonempty; sizes sum to the row count.
struct Clustering {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  // row index -> cluster index
  std::vector<std::size_t> sizes;       // |C_k|
  std::vector<double> centroids;        // k x d row-major

  void check(std::size_t n) const;
};

/// Lloyd's k-means with k-means++ initialization from `seed`; at most 100
/// iterations or centroid shift below 1e-6. Deterministic given the seed.
/// If fewer than k distinct points exist, k is reduced; empty clusters are
/// dropped and the remainder renumbered.
Clustering cluster(const EmbeddingMatrix& emb, std::size_t k, std::uint64_t seed);

/// Nearest-centroid assignment, OpenMP-parallel over rows. Ties break toward
/// the lower cluster index, so the result is independent of thread count.
void assign_clusters(const EmbeddingMatrix& emb, const std::vector<double>& centroids,
                     std::size_t k, std::vector<std::size_t>& assignment);

namespace serial {
/// Reference implementation kept for testing; bit-identical to the
/// OpenMP path.
void assign_clusters(const EmbeddingMatrix& emb, const std::vector<double>& centroids,
                     std::size_t k, std::vector<std::size_t>& assignment);
}  // namespace serial

}  // namespace uqe
