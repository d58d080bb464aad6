#include "uqe/embed/embedding.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "uqe/util/hash.hpp"

namespace uqe {

void HashEmbeddingProvider::embed_one(const std::string& text, float* out) const {
  for (std::size_t j = 0; j < d_; ++j) out[j] = 0.0f;
  if (text.size() >= ngram_) {
    for (std::size_t i = 0; i + ngram_ <= text.size(); ++i) {
      std::uint64_t h = fnv1a(std::string_view(text).substr(i, ngram_));
      std::size_t bucket = (h >> 1) % d_;
      float sign = (h & 1) ? 1.0f : -1.0f;
      out[bucket] += sign;
    }
  } else if (!text.empty()) {
    std::uint64_t h = fnv1a(text);
    out[(h >> 1) % d_] += (h & 1) ? 1.0f : -1.0f;
  }
  double norm = 0.0;
  for (std::size_t j = 0; j < d_; ++j) norm += static_cast<double>(out[j]) * out[j];
  if (norm > 0.0) {
    float inv = static_cast<float>(1.0 / std::sqrt(norm));
    for (std::size_t j = 0; j < d_; ++j) out[j] *= inv;
  }
}

void HashEmbeddingProvider::embed_batch(const std::vector<std::string>& texts, float* out) {
  const std::int64_t n = static_cast<std::int64_t>(texts.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) embed_one(texts[i], out + i * d_);
}

void HttpEmbeddingProvider::embed_batch(const std::vector<std::string>& texts, float* out) {
  using nlohmann::json;
  std::string token;
  if (!config_.auth_env.empty()) {
    const char* v = std::getenv(config_.auth_env.c_str());
    if (v) token = v;
  }
  std::size_t done = 0;
  while (done < texts.size()) {
    std::size_t take = std::min(config_.batch_size, texts.size() - done);
    json body = {{"model", config_.model}, {"input", json::array()}};
    for (std::size_t i = 0; i < take; ++i) body["input"].push_back(texts[done + i]);

    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    auto res = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!res || res->status != 200)
      throw Error("oracle", "embedding-transport",
                  "embedding endpoint failed" +
                      (res ? " with status " + std::to_string(res->status) : ""));
    try {
      json reply = json::parse(res->body);
      const auto& data = reply.at("data");
      if (data.size() != take)
        throw Error("oracle", "embedding-transport", "embedding batch size mismatch");
      for (std::size_t i = 0; i < take; ++i) {
        const auto& vec = data.at(i).at("embedding");
        if (vec.size() != config_.dimension)
          throw Error("oracle", "embedding-transport", "embedding dimension mismatch");
        for (std::size_t j = 0; j < config_.dimension; ++j)
          out[(done + i) * config_.dimension + j] = vec.at(j).get<float>();
      }
    } catch (const json::exception& e) {
      throw Error("oracle", "embedding-transport",
                  std::string("malformed embedding response: ") + e.what());
    }
    done += take;
  }
}

std::string row_embedding_text(const Table& table, std::size_t row,
                               const std::vector<std::size_t>& columns) {
  std::string text;
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (k) text += "\n";
    text += table.cell(row, columns[k]).render();
  }
  return text;
}

EmbeddingMatrix embed_table(const Table& table, const std::vector<std::size_t>& columns,
                            EmbeddingProvider& provider) {
  for (std::size_t j : columns)
    if (table.schema().at(j).kind != ColumnKind::Unstructured)
      throw Error("execute", "type-mismatch",
                  "embedding requested over structured column '" + table.schema().at(j).name +
                      "'");
  if (provider.dimension() < 2)
    throw Error("execute", "invalid-config", "embedding dimension must be at least 2");
  EmbeddingMatrix m;
  m.n = table.num_rows();
  m.d = provider.dimension();
  m.provider_id = provider.id();
  m.data.resize(m.n * m.d);
  std::vector<std::string> texts;
  texts.reserve(m.n);
  for (std::size_t i = 0; i < m.n; ++i) texts.push_back(row_embedding_text(table, i, columns));
  provider.embed_batch(texts, m.data.data());
  for (float v : m.data)
    if (!std::isfinite(v))
      throw Error("execute", "embedding-transport", "non-finite embedding value");
  return m;
}

namespace serial {

EmbeddingMatrix embed_table(const Table& table, const std::vector<std::size_t>& columns,
                            HashEmbeddingProvider& provider) {
  EmbeddingMatrix m;
  m.n = table.num_rows();
  m.d = provider.dimension();
  m.provider_id = provider.id();
  m.data.resize(m.n * m.d);
  for (std::size_t i = 0; i < m.n; ++i)
    provider.embed_one(row_embedding_text(table, i, columns), m.row(i));
  return m;
}

}  // namespace serial

namespace {
constexpr std::uint32_t kCacheMagic = 0x55514531;  // "UQE1"
constexpr std::uint32_t kCacheVersion = 1;
}  // namespace

std::uint64_t EmbeddingCache::content_key(const Table& table,
                                          const std::vector<std::size_t>& columns,
                                          const std::string& provider_id) const {
  std::uint64_t h = fnv1a(provider_id);
  for (std::size_t j : columns) h = fnv1a(table.schema().at(j).name, h);
  for (std::size_t i = 0; i < table.num_rows(); ++i)
    for (std::size_t j : columns) h = fnv1a(table.cell(i, j).render(), h);
  return h;
}

std::string EmbeddingCache::path_for(std::uint64_t key) const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(key));
  return directory_ + "/emb_" + buf + ".bin";
}

bool EmbeddingCache::load(std::uint64_t key, EmbeddingMatrix& out) const {
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return false;
  std::uint32_t magic = 0, version = 0;
  std::uint64_t d = 0, n = 0, id_len = 0;
  in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || magic != kCacheMagic || version != kCacheVersion) return false;
  in.read(reinterpret_cast<char*>(&d), sizeof(d));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&id_len), sizeof(id_len));
  if (!in) return false;
  std::string id(id_len, '\0');
  in.read(id.data(), static_cast<std::streamsize>(id_len));
  std::vector<float> data(n * d);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!in) return false;
  out.n = n;
  out.d = d;
  out.provider_id = std::move(id);
  out.data = std::move(data);
  return true;
}

void EmbeddingCache::store(std::uint64_t key, const EmbeddingMatrix& m) const {
  std::filesystem::create_directories(directory_);
  std::ofstream out(path_for(key), std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("execute", "cache-io", "cannot write embedding cache file " + path_for(key));
  std::uint64_t d = m.d, n = m.n, id_len = m.provider_id.size();
  out.write(reinterpret_cast<const char*>(&kCacheMagic), sizeof(kCacheMagic));
  out.write(reinterpret_cast<const char*>(&kCacheVersion), sizeof(kCacheVersion));
  out.write(reinterpret_cast<const char*>(&d), sizeof(d));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&id_len), sizeof(id_len));
  out.write(m.provider_id.data(), static_cast<std::streamsize>(id_len));
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(float)));
}

EmbeddingMatrix EmbeddingCache::get_or_embed(const Table& table,
                                             const std::vector<std::size_t>& columns,
                                             EmbeddingProvider& provider) const {
  const std::uint64_t key = content_key(table, columns, provider.id());
  EmbeddingMatrix m;
  if (load(key, m) && m.provider_id == provider.id() && m.n == table.num_rows()) return m;
  m = uqe::embed_table(table, columns, provider);
  store(key, m);
  return m;
}

}  // namespace uqe
