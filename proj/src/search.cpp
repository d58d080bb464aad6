#include "uqe/learn/search.hpp"

#include <algorithm>
#include <random>

namespace uqe {

std::size_t SearchState::positives_found() const {
  std::size_t p = 0;
  for (char l : labels) p += l != 0;
  return p;
}

std::vector<std::size_t> acquire_batch(const std::vector<double>& scores,
                                       const std::vector<bool>& labeled_mask,
                                       const std::vector<std::size_t>& candidates,
                                       std::size_t batch_size) {
  std::vector<std::size_t> open;
  for (std::size_t i : candidates)
    if (!labeled_mask[i]) open.push_back(i);
  if (open.size() > batch_size) {
    std::partial_sort(open.begin(), open.begin() + batch_size, open.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (scores[a] != scores[b]) return scores[a] > scores[b];
                        return a < b;
                      });
    open.resize(batch_size);
  }
  std::sort(open.begin(), open.end());
  return open;
}

SearchOutcome search_with(const std::vector<std::size_t>& candidates,
                          const std::function<char(std::size_t)>& label_row,
                          const EmbeddingMatrix& embeddings, const SearchConfig& config) {
  SearchOutcome out;
  SearchState& state = out.state;
  state.budget = config.budget;
  state.batch_size = config.batch_size;

  std::mt19937_64 score_rng(config.seed);
  std::vector<double> untrained(embeddings.n);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (double& s : untrained) s = u01(score_rng);
  std::mt19937_64 noise_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<bool> labeled_mask(embeddings.n, false);
  std::vector<double> scores;
  std::size_t cumulative_positives = 0;

  while (state.labeled.size() < config.budget) {
    if (config.stop_after_positives && cumulative_positives >= *config.stop_after_positives)
      break;

    if (state.surrogate.trained)
      surrogate_scores(state.surrogate, embeddings, scores);
    else
      scores = untrained;
    if (config.exploration_sigma > 0.0) {
      double sigma = config.exploration_sigma *
                     std::pow(config.exploration_decay, static_cast<double>(state.step));
      std::normal_distribution<double> noise(0.0, sigma);
      for (std::size_t i : candidates) scores[i] += noise(noise_rng);
    }

    std::size_t want = std::min(config.batch_size, config.budget - state.labeled.size());
    auto batch = acquire_batch(scores, labeled_mask, candidates, want);
    if (batch.empty()) break;  // everything labeled

    std::vector<char> batch_labels(batch.size(), 0);
    std::exception_ptr failure;
    const std::int64_t bn = static_cast<std::int64_t>(batch.size());
#ifdef _OPENMP
    int threads = std::max(1, std::min<int>(config.parallelism, static_cast<int>(batch.size())));
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (std::int64_t k = 0; k < bn; ++k) {
      try {
        batch_labels[k] = label_row(batch[k]);
      } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
        {
          if (!failure) failure = std::current_exception();
        }
      }
    }
    if (failure) {
      state.aborted = true;
      try {
        std::rethrow_exception(failure);
      } catch (const std::exception& e) {
        state.error = e.what();
      }
      break;
    }

    for (std::size_t k = 0; k < batch.size(); ++k) {
      labeled_mask[batch[k]] = true;
      state.labeled.push_back(batch[k]);
      state.labels.push_back(batch_labels[k]);
      cumulative_positives += batch_labels[k] != 0;
    }
    ++state.step;
    state.trace.push_back({state.step, cumulative_positives, state.labeled.size()});

    bool has_pos = false, has_neg = false;
    for (char l : state.labels) (l ? has_pos : has_neg) = true;
    if (has_pos && has_neg) {
      LogisticProblem problem;
      problem.embeddings = &embeddings;
      problem.rows = state.labeled;
      problem.labels = state.labels;
      problem.lambda = state.surrogate.lambda;
      state.surrogate = fit_logistic(problem);
    }
  }

  for (std::size_t k = 0; k < state.labeled.size(); ++k)
    if (state.labels[k]) out.positives.push_back(state.labeled[k]);
  std::sort(out.positives.begin(), out.positives.end());
  return out;
}

SearchOutcome search(const Table& table, const Condition& cond, OracleBackend& oracle,
                     const EmbeddingMatrix& embeddings, const SearchConfig& config) {
  std::vector<std::size_t> candidates(table.num_rows());
  for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
  auto label = [&](std::size_t i) -> char {
    return oracle.judge(RowRef{&table, i}, cond) ? 1 : 0;
  };
  return search_with(candidates, label, embeddings, config);
}

std::string trace_to_csv(const std::vector<TracePoint>& trace) {
  std::string csv = "step,cumulative_positives,cumulative_calls\n";
  for (const auto& t : trace)
    csv += std::to_string(t.step) + "," + std::to_string(t.cumulative_positives) + "," +
           std::to_string(t.cumulative_calls) + "\n";
  return csv;
}

}  // namespace uqe
