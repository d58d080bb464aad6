#pragma once

// Independent test oracles: brute-force enumeration, truth tables, finite
// differences, transport-vertex search and synthetic fixtures. Everything
// here stays independent of the implementation paths it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "uqe/oracle/oracle.hpp"
#include "uqe/table.hpp"
#include "uqe/uql/ast.hpp"

namespace testsup {

// ---------------------------------------------------------------------------
// synthetic labeled tables

struct SyntheticSpec {
  std::size_t n = 1000;
  double prevalence = 0.5;
  bool text_correlates = true;  // positive rows draw words from the positive topic
  std::uint64_t seed = 0;
  std::size_t words_per_row = 8;
};

inline const std::vector<std::string>& positive_vocab() {
  static const std::vector<std::string> v = {
      "luminous", "stirring",  "brilliant", "tender",   "masterful", "joyful",
      "radiant",  "gripping",  "sublime",   "heartfelt", "dazzling", "soaring",
      "witty",    "exquisite", "rousing",   "charming"};
  return v;
}

inline const std::vector<std::string>& negative_vocab() {
  static const std::vector<std::string> v = {
      "dreary",  "hollow",   "plodding", "stilted",  "lifeless", "tedious",
      "clumsy",  "inert",    "grating",  "muddled",  "bland",    "shapeless",
      "turgid",  "aimless",  "leaden",   "wooden"};
  return v;
}

inline uqe::Schema review_schema() {
  return uqe::Schema({
      {"review", uqe::ColumnKind::Unstructured, uqe::ValueType::UnstructuredText, {}},
      {"sentiment", uqe::ColumnKind::Structured, uqe::ValueType::EnumLabel,
       {"positive", "negative"}},
      {"year", uqe::ColumnKind::Structured, uqe::ValueType::Integer, {}},
      {"score", uqe::ColumnKind::Structured, uqe::ValueType::Float, {}},
  });
}

inline uqe::Table make_labeled_table(const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<uqe::Row> rows;
  rows.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    bool positive = u01(rng) < spec.prevalence;
    bool positive_topic = spec.text_correlates ? positive : u01(rng) < 0.5;
    const auto& vocab = positive_topic ? positive_vocab() : negative_vocab();
    std::string text;
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    for (std::size_t w = 0; w < spec.words_per_row; ++w) {
      if (w) text += " ";
      text += vocab[pick(rng)];
    }
    rows.push_back({
        uqe::Value::unstructured_text(text),
        uqe::Value::enum_label(positive ? "positive" : "negative"),
        uqe::Value::integer(2010 + static_cast<std::int64_t>(i % 15)),
        uqe::Value::real(static_cast<double>((i * 7) % 100) / 10.0),
    });
  }
  return uqe::validate_table(review_schema(), std::move(rows));
}

inline std::size_t count_positive(const uqe::Table& table) {
  auto j = *table.schema().index_of("sentiment");
  std::size_t count = 0;
  for (std::size_t i = 0; i < table.num_rows(); ++i)
    count += table.cell(i, j).as_string() == "positive";
  return count;
}

inline uqe::MockSpec review_mock() {
  uqe::MockSpec spec;
  spec.label_column = "sentiment";
  spec.judge_bindings["the review is positive"] = {"sentiment", "positive"};
  return spec;
}

inline uqe::Condition positive_condition() {
  return uqe::Condition{"the review is positive", {"review"}};
}

// ---------------------------------------------------------------------------
// boolean-tree truth tables

// random AND/OR tree over `num_preds` distinct semantic predicates p0..pk
inline std::unique_ptr<uqe::uql::BoolExpr> random_tree(std::size_t num_preds,
                                                       std::mt19937_64& rng) {
  std::vector<std::unique_ptr<uqe::uql::BoolExpr>> nodes;
  for (std::size_t i = 0; i < num_preds; ++i)
    nodes.push_back(std::make_unique<uqe::uql::BoolExpr>(uqe::uql::Predicate{
        uqe::uql::Predicate::Semantic{"p" + std::to_string(i)}, uqe::Span{}}));
  std::shuffle(nodes.begin(), nodes.end(), rng);
  while (nodes.size() > 1) {
    std::uniform_int_distribution<std::size_t> pick(0, nodes.size() - 2);
    std::size_t at = pick(rng);
    auto lhs = std::move(nodes[at]);
    auto rhs = std::move(nodes[at + 1]);
    nodes.erase(nodes.begin() + at, nodes.begin() + at + 2);
    std::bernoulli_distribution is_and(0.5);
    nodes.insert(nodes.begin() + at,
                 std::make_unique<uqe::uql::BoolExpr>(
                     is_and(rng) ? uqe::uql::BoolOp::And : uqe::uql::BoolOp::Or,
                     std::move(lhs), std::move(rhs)));
  }
  return std::move(nodes.front());
}

inline std::size_t pred_id(const uqe::uql::Predicate& pred) {
  return std::stoul(pred.semantic().text.substr(1));
}

inline bool eval_tree(const uqe::uql::BoolExpr& tree, std::uint64_t assignment) {
  if (tree.is_leaf()) return (assignment >> pred_id(*tree.pred)) & 1;
  bool l = eval_tree(*tree.lhs, assignment);
  bool r = eval_tree(*tree.rhs, assignment);
  return tree.op == uqe::uql::BoolOp::And ? (l && r) : (l || r);
}

inline bool eval_dnf(const uqe::uql::DnfFormula& dnf, std::uint64_t assignment) {
  for (const auto& conj : dnf.disjuncts) {
    bool all = true;
    for (const auto& pred : conj)
      if (!((assignment >> pred_id(pred)) & 1)) {
        all = false;
        break;
      }
    if (all) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// exhaustive enumeration of stratified samples (small N)

// all size-k subsets of [0, n)
inline void for_each_combination(std::size_t n, std::size_t k,
                                 const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    fn(idx);
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// exact E[estimate] over every possible stratified draw: strata given as
// member lists, n_k per stratum, estimator = sum over sampled of w_i * f_i
// with w_i = |C|/n_C (that is the COUNT estimator after normalization)
inline double exact_stratified_expectation(
    const std::vector<std::vector<std::size_t>>& strata, const std::vector<std::size_t>& alloc,
    const std::vector<char>& f) {
  // per-stratum expectation is independent; E[sum] = sum of per-stratum
  // expectations over all within-stratum subsets
  double total = 0.0;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const auto& members = strata[s];
    const double w = static_cast<double>(members.size()) / static_cast<double>(alloc[s]);
    double sum = 0.0;
    std::size_t count = 0;
    for_each_combination(members.size(), alloc[s], [&](const std::vector<std::size_t>& pick) {
      double est = 0.0;
      for (std::size_t p : pick) est += w * (f[members[p]] ? 1.0 : 0.0);
      sum += est;
      ++count;
    });
    total += sum / static_cast<double>(count);
  }
  return total;
}

// ---------------------------------------------------------------------------
// statistics helpers

struct MeanVar {
  double mean = 0.0;
  double variance = 0.0;  // sample variance
  double std_error = 0.0;
};

inline MeanVar mean_var(const std::vector<double>& xs) {
  MeanVar mv;
  for (double x : xs) mv.mean += x;
  mv.mean /= static_cast<double>(xs.size());
  for (double x : xs) mv.variance += (x - mv.mean) * (x - mv.mean);
  if (xs.size() > 1) mv.variance /= static_cast<double>(xs.size() - 1);
  mv.std_error = std::sqrt(mv.variance / static_cast<double>(xs.size()));
  return mv;
}

// ---------------------------------------------------------------------------
// brute-force optimal transport: enumerate basis edge sets (spanning trees of
// the bipartite supply/demand graph), solve each tree exactly, keep the best
// feasible vertex

inline double transport_tree_cost(const std::vector<double>& supply,
                                  const std::vector<double>& demand,
                                  const std::vector<std::vector<double>>& cost,
                                  const std::vector<std::pair<int, int>>& edges,
                                  bool& feasible) {
  const int m = static_cast<int>(supply.size());
  const int n = static_cast<int>(demand.size());
  const int nodes = m + n;
  // solve flows by repeated leaf elimination
  std::vector<double> balance(nodes);
  for (int i = 0; i < m; ++i) balance[i] = supply[i];
  for (int j = 0; j < n; ++j) balance[m + j] = -demand[j];
  std::vector<int> degree(nodes, 0);
  std::vector<std::vector<int>> incident(nodes);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
    int u = edges[e].first, v = m + edges[e].second;
    ++degree[u];
    ++degree[v];
    incident[u].push_back(e);
    incident[v].push_back(e);
  }
  std::vector<bool> edge_done(edges.size(), false);
  std::vector<bool> node_done(nodes, false);
  std::vector<double> flow(edges.size(), 0.0);
  for (int round = 0; round < nodes; ++round) {
    int leaf = -1;
    for (int v = 0; v < nodes; ++v)
      if (!node_done[v] && degree[v] == 1) {
        leaf = v;
        break;
      }
    if (leaf < 0) break;
    int edge = -1;
    for (int e : incident[leaf])
      if (!edge_done[e]) edge = e;
    if (edge < 0) {
      node_done[leaf] = true;
      continue;
    }
    int u = edges[edge].first, v = m + edges[edge].second;
    // flow directed supply -> demand; leaf balance fixes it
    double fval = leaf < m ? balance[leaf] : -balance[leaf];
    flow[edge] = fval;
    balance[u] -= fval;
    balance[v] += fval;
    edge_done[edge] = true;
    node_done[leaf] = true;
    int other = leaf == u ? v : u;
    --degree[other];
    --degree[leaf];
  }
  feasible = true;
  for (int v = 0; v < nodes; ++v)
    if (std::abs(balance[v]) > 1e-9) feasible = false;
  double total = 0.0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (flow[e] < -1e-12) feasible = false;
    total += std::max(0.0, flow[e]) * cost[edges[e].first][edges[e].second];
  }
  return total;
}

inline double brute_force_transport(const std::vector<double>& supply,
                                    const std::vector<double>& demand,
                                    const std::vector<std::vector<double>>& cost) {
  const int m = static_cast<int>(supply.size());
  const int n = static_cast<int>(demand.size());
  std::vector<std::pair<int, int>> all_edges;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) all_edges.emplace_back(i, j);
  const int need = m + n - 1;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(need);

  // connectivity check over chosen edges
  auto spanning = [&](const std::vector<std::pair<int, int>>& edges) {
    std::vector<int> parent(m + n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    int merges = 0;
    for (auto [i, j] : edges) {
      int a = find(i), b = find(m + j);
      if (a == b) return false;  // cycle: not a tree
      parent[a] = b;
      ++merges;
    }
    return merges == m + n - 1;
  };

  std::function<void(int, int)> rec = [&](int start, int chosen) {
    if (chosen == need) {
      std::vector<std::pair<int, int>> edges;
      for (int k = 0; k < need; ++k) edges.push_back(all_edges[pick[k]]);
      if (!spanning(edges)) return;
      bool feasible = false;
      double c = transport_tree_cost(supply, demand, cost, edges, feasible);
      if (feasible) best = std::min(best, c);
      return;
    }
    for (int e = start; e <= static_cast<int>(all_edges.size()) - (need - chosen); ++e) {
      pick[chosen] = e;
      rec(e + 1, chosen + 1);
    }
  };
  rec(0, 0);
  return best;
}

// ---------------------------------------------------------------------------
// negative-binomial simulation: sequential Bernoulli(p) trials until k
// successes, mean draws over `trials` runs

inline double simulate_draws_until(std::size_t k, double p, std::size_t trials,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution hit(p);
  double total = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::size_t successes = 0, draws = 0;
    while (successes < k) {
      ++draws;
      if (hit(rng)) ++successes;
    }
    total += static_cast<double>(draws);
  }
  return total / static_cast<double>(trials);
}

}  // namespace testsup
