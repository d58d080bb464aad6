#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "uqe/table.hpp"

namespace uqe {

/// N x d row-major matrix of float32 row embeddings.
struct EmbeddingMatrix {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<float> data;
  std::string provider_id;

  const float* row(std::size_t i) const { return data.data() + i * d; }
  float* row(std::size_t i) { return data.data() + i * d; }
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual void embed_batch(const std::vector<std::string>& texts, float* out) = 0;
};

/// Deterministic offline provider: signed feature hashing of character
/// n-grams into d buckets, L2-normalized. Exists so every statistical
/// property test runs without a network.
class HashEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dimension = 64, std::size_t ngram = 3)
      : d_(dimension), ngram_(ngram) {}

  std::string id() const override {
    return "hash-ngram" + std::to_string(ngram_) + "-d" + std::to_string(d_);
  }
  std::size_t dimension() const override { return d_; }
  void embed_batch(const std::vector<std::string>& texts, float* out) override;

  /// Single-vector kernel shared by the parallel and serial paths.
  void embed_one(const std::string& text, float* out) const;

 private:
  std::size_t d_;
  std::size_t ngram_;
};

/// HTTP provider speaking a minimal JSON embeddings POST:
/// {"model": ..., "input": [texts]} -> {"data": [{"embedding": [...]}]}.
struct HttpEmbeddingConfig {
  std::string endpoint = "http://localhost:8080";
  std::string path = "/v1/embeddings";
  std::string model = "default";
  std::string auth_env;
  std::size_t dimension = 512;
  int timeout_seconds = 60;
  std::size_t batch_size = 64;
};

class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEmbeddingConfig config) : config_(std::move(config)) {}
  std::string id() const override { return "http-" + config_.model; }
  std::size_t dimension() const override { return config_.dimension; }
  void embed_batch(const std::vector<std::string>& texts, float* out) override;

 private:
  HttpEmbeddingConfig config_;
};

/// Renders the given unstructured columns of a row into the text fed to the
/// embedding provider (columns joined by newlines).
std::string row_embedding_text(const Table& table, std::size_t row,
                               const std::vector<std::size_t>& columns);

/// One vector per table row over the chosen unstructured columns.
EmbeddingMatrix embed_table(const Table& table, const std::vector<std::size_t>& columns,
                            EmbeddingProvider& provider);

/// Binary cache: header (magic, version, d, N, provider-id) + row-major
/// little-endian float32. Keyed by (provider id, column set, content hash).
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::string directory) : directory_(std::move(directory)) {}

  std::uint64_t content_key(const Table& table, const std::vector<std::size_t>& columns,
                            const std::string& provider_id) const;

  bool load(std::uint64_t key, EmbeddingMatrix& out) const;
  void store(std::uint64_t key, const EmbeddingMatrix& matrix) const;

  /// Cached wrapper around embed_table; a hit performs zero provider calls.
  EmbeddingMatrix get_or_embed(const Table& table, const std::vector<std::size_t>& columns,
                               EmbeddingProvider& provider) const;

 private:
  std::string path_for(std::uint64_t key) const;
  std::string directory_;
};

namespace serial {
/// Reference implementation kept for testing; bit-identical to the
/// OpenMP path.
EmbeddingMatrix embed_table(const Table& table, const std::vector<std::size_t>& columns,
                            HashEmbeddingProvider& provider);
}  // namespace serial

}  // namespace uqe
