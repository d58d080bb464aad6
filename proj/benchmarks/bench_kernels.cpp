// Serial vs OpenMP kernel comparison: hash embedding, k-means assignment,
// logistic gradient and surrogate scoring.

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "uqe/embed/kmeans.hpp"
#include "uqe/learn/logistic.hpp"

using namespace uqe;

namespace {

std::vector<std::string> synthetic_texts(std::size_t n) {
  std::mt19937_64 rng(7);
  std::vector<std::string> words = {"stirring", "hollow",  "radiant", "plodding",
                                    "gripping", "tedious", "sublime", "wooden"};
  std::vector<std::string> texts;
  texts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    for (int w = 0; w < 24; ++w) {
      if (w) text += " ";
      text += words[pick(rng)];
    }
    texts.push_back(std::move(text));
  }
  return texts;
}

EmbeddingMatrix synthetic_embeddings(std::size_t n, std::size_t d) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss(0.0, 1.0);
  EmbeddingMatrix m;
  m.n = n;
  m.d = d;
  m.provider_id = "bench";
  m.data.resize(n * d);
  for (auto& v : m.data) v = static_cast<float>(gauss(rng));
  return m;
}

std::vector<double> synthetic_centroids(std::size_t k, std::size_t d) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> c(k * d);
  for (auto& v : c) v = gauss(rng);
  return c;
}

}  // namespace

static void BM_embed_serial(benchmark::State& state) {
  auto texts = synthetic_texts(static_cast<std::size_t>(state.range(0)));
  HashEmbeddingProvider provider(64);
  std::vector<float> out(texts.size() * 64);
  for (auto _ : state) {
    for (std::size_t i = 0; i < texts.size(); ++i)
      provider.embed_one(texts[i], out.data() + i * 64);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_embed_serial)->Arg(2000)->Arg(20000);

static void BM_embed_openmp(benchmark::State& state) {
  auto texts = synthetic_texts(static_cast<std::size_t>(state.range(0)));
  HashEmbeddingProvider provider(64);
  std::vector<float> out(texts.size() * 64);
  for (auto _ : state) {
    provider.embed_batch(texts, out.data());
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_embed_openmp)->Arg(2000)->Arg(20000);

static void BM_kmeans_assign_serial(benchmark::State& state) {
  auto emb = synthetic_embeddings(static_cast<std::size_t>(state.range(0)), 64);
  auto centroids = synthetic_centroids(10, 64);
  std::vector<std::size_t> assignment;
  for (auto _ : state) {
    serial::assign_clusters(emb, centroids, 10, assignment);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_kmeans_assign_serial)->Arg(5000)->Arg(50000);

static void BM_kmeans_assign_openmp(benchmark::State& state) {
  auto emb = synthetic_embeddings(static_cast<std::size_t>(state.range(0)), 64);
  auto centroids = synthetic_centroids(10, 64);
  std::vector<std::size_t> assignment;
  for (auto _ : state) {
    assign_clusters(emb, centroids, 10, assignment);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_kmeans_assign_openmp)->Arg(5000)->Arg(50000);

static void BM_logistic_gradient_serial(benchmark::State& state) {
  auto emb = synthetic_embeddings(static_cast<std::size_t>(state.range(0)), 64);
  LogisticProblem problem;
  problem.embeddings = &emb;
  problem.rows.resize(emb.n);
  std::iota(problem.rows.begin(), problem.rows.end(), 0);
  for (std::size_t i = 0; i < emb.n; ++i) problem.labels.push_back(i % 3 == 0);
  std::vector<double> w(64, 0.1), grad;
  for (auto _ : state) {
    serial::logistic_gradient(problem, w, 0.0, grad);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_logistic_gradient_serial)->Arg(256)->Arg(4096);

static void BM_logistic_gradient_openmp(benchmark::State& state) {
  auto emb = synthetic_embeddings(static_cast<std::size_t>(state.range(0)), 64);
  LogisticProblem problem;
  problem.embeddings = &emb;
  problem.rows.resize(emb.n);
  std::iota(problem.rows.begin(), problem.rows.end(), 0);
  for (std::size_t i = 0; i < emb.n; ++i) problem.labels.push_back(i % 3 == 0);
  std::vector<double> w(64, 0.1), grad;
  for (auto _ : state) {
    logistic_gradient(problem, w, 0.0, grad);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_logistic_gradient_openmp)->Arg(256)->Arg(4096);

static void BM_scores_serial(benchmark::State& state) {
  auto emb = synthetic_embeddings(static_cast<std::size_t>(state.range(0)), 64);
  Surrogate s;
  s.weights.assign(64, 0.2);
  s.trained = true;
  std::vector<double> out;
  for (auto _ : state) {
    serial::surrogate_scores(s, emb, out);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_scores_serial)->Arg(5000)->Arg(50000);

static void BM_scores_openmp(benchmark::State& state) {
  auto emb = synthetic_embeddings(static_cast<std::size_t>(state.range(0)), 64);
  Surrogate s;
  s.weights.assign(64, 0.2);
  s.trained = true;
  std::vector<double> out;
  for (auto _ : state) {
    surrogate_scores(s, emb, out);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_scores_openmp)->Arg(5000)->Arg(50000);

BENCHMARK_MAIN();
