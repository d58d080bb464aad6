#include "uqe/engine/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uqe/error.hpp"

namespace uqe {

double eval_relative_error(double predicted, double truth) {
  if (truth == 0.0)
    throw Error("execute", "zero-truth", "relative error undefined for zero truth");
  return std::abs(predicted - truth) / std::abs(truth);
}

double eval_f1(const std::unordered_set<std::size_t>& retrieved,
               const std::unordered_set<std::size_t>& relevant) {
  if (retrieved.empty() && relevant.empty()) return 1.0;
  if (retrieved.empty() || relevant.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i : retrieved) hits += relevant.count(i);
  if (hits == 0) return 0.0;
  double precision = static_cast<double>(hits) / static_cast<double>(retrieved.size());
  double recall = static_cast<double>(hits) / static_cast<double>(relevant.size());
  return 2.0 * precision * recall / (precision + recall);
}

// Transportation simplex (MODI) with Bland's pivoting rule. The basis is a
// spanning tree over supply and demand nodes seeded by the northwest-corner
// rule; degenerate zero-flow basic cells are kept so the tree always has
// exactly m + n - 1 edges.
double solve_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                       const std::vector<std::vector<double>>& cost) {
  const std::size_t m = supply.size();
  const std::size_t n = demand.size();
  double total_supply = 0.0, total_demand = 0.0;
  for (double s : supply) {
    if (s < 0.0) throw Error("execute", "invalid-histogram", "negative supply mass");
    total_supply += s;
  }
  for (double d : demand) {
    if (d < 0.0) throw Error("execute", "invalid-histogram", "negative demand mass");
    total_demand += d;
  }
  if (!(total_supply > 0.0) || !(total_demand > 0.0))
    throw Error("execute", "zero-mass", "transport requires positive mass on both sides");
  if (std::abs(total_supply - total_demand) > 1e-9 * std::max(total_supply, total_demand))
    throw Error("execute", "invalid-histogram", "supply and demand totals differ");

  std::vector<std::vector<double>> flow(m, std::vector<double>(n, 0.0));
  std::vector<std::vector<bool>> basic(m, std::vector<bool>(n, false));

  // northwest-corner start
  {
    std::vector<double> s = supply, d = demand;
    std::size_t i = 0, j = 0;
    while (i < m && j < n) {
      double moved = std::min(s[i], d[j]);
      flow[i][j] = moved;
      basic[i][j] = true;
      s[i] -= moved;
      d[j] -= moved;
      if (i == m - 1 && j == n - 1) break;
      // advance one side only; ties keep a degenerate basic cell
      if (s[i] <= d[j] && i + 1 < m)
        ++i;
      else
        ++j;
    }
  }

  const int nodes = static_cast<int>(m + n);
  std::vector<double> u(m), v(n);
  std::vector<char> known_u(m), known_v(n);

  for (int iteration = 0; iteration < 100000; ++iteration) {
    // duals from u[0] = 0 over the basis tree
    std::fill(known_u.begin(), known_u.end(), 0);
    std::fill(known_v.begin(), known_v.end(), 0);
    u[0] = 0.0;
    known_u[0] = 1;
    for (int round = 0; round < nodes; ++round) {
      bool progress = false;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          if (!basic[i][j]) continue;
          if (known_u[i] && !known_v[j]) {
            v[j] = cost[i][j] - u[i];
            known_v[j] = 1;
            progress = true;
          } else if (!known_u[i] && known_v[j]) {
            u[i] = cost[i][j] - v[j];
            known_u[i] = 1;
            progress = true;
          }
        }
      if (!progress) break;
    }

    // entering variable: Bland's rule over negative reduced costs
    std::size_t ei = m, ej = n;
    for (std::size_t i = 0; i < m && ei == m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (basic[i][j]) continue;
        if (cost[i][j] - u[i] - v[j] < -1e-12) {
          ei = i;
          ej = j;
          break;
        }
      }
    if (ei == m) break;  // optimal

    // unique cycle: path from row ei to column ej through the basis tree
    std::vector<int> parent(nodes, -2);  // -2 unvisited; -1 root
    std::vector<int> queue = {static_cast<int>(ei)};
    parent[ei] = -1;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      int node = queue[q];
      if (node < static_cast<int>(m)) {
        for (std::size_t j = 0; j < n; ++j)
          if (basic[node][j] && parent[m + j] == -2) {
            parent[m + j] = node;
            queue.push_back(static_cast<int>(m + j));
          }
      } else {
        std::size_t j = node - m;
        for (std::size_t i = 0; i < m; ++i)
          if (basic[i][j] && parent[i] == -2) {
            parent[i] = node;
            queue.push_back(static_cast<int>(i));
          }
      }
    }
    if (parent[m + ej] == -2)
      throw Error("execute", "transport-degenerate", "basis tree disconnected");

    // cycle cells alternate signs; the entering cell is '+'
    std::vector<std::pair<std::size_t, std::size_t>> minus_cells, plus_cells;
    plus_cells.emplace_back(ei, ej);
    int node = static_cast<int>(m + ej);
    bool plus = false;  // next edge from ej backwards is '-'
    while (parent[node] != -1) {
      int prev = parent[node];
      int row_node = node < static_cast<int>(m) ? node : prev;
      int col_node = node < static_cast<int>(m) ? prev : node;
      std::size_t ri = static_cast<std::size_t>(row_node);
      std::size_t cj = static_cast<std::size_t>(col_node - static_cast<int>(m));
      if (plus)
        plus_cells.emplace_back(ri, cj);
      else
        minus_cells.emplace_back(ri, cj);
      plus = !plus;
      node = prev;
    }

    // leaving variable: minimal flow on '-' cells, lowest index on ties
    double theta = std::numeric_limits<double>::infinity();
    std::size_t li = m, lj = n;
    for (auto [i, j] : minus_cells) {
      if (flow[i][j] < theta - 1e-18 ||
          (std::abs(flow[i][j] - theta) <= 1e-18 &&
           (li == m || i < li || (i == li && j < lj)))) {
        theta = flow[i][j];
        li = i;
        lj = j;
      }
    }
    for (auto [i, j] : plus_cells) flow[i][j] += theta;
    for (auto [i, j] : minus_cells) flow[i][j] -= theta;
    basic[ei][ej] = true;
    basic[li][lj] = false;
    flow[li][lj] = 0.0;
  }

  double total_cost = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) total_cost += flow[i][j] * cost[i][j];
  return total_cost;
}

double eval_emd(const std::vector<LabeledCount>& predicted,
                const std::vector<LabeledCount>& truth, EmbeddingProvider& label_embedder) {
  if (predicted.empty() || truth.empty())
    throw Error("execute", "zero-mass", "EMD requires nonempty histograms");
  double pred_total = 0.0, truth_total = 0.0;
  for (const auto& p : predicted) {
    if (p.count < 0.0) throw Error("execute", "invalid-histogram", "negative count");
    pred_total += p.count;
  }
  for (const auto& t : truth) {
    if (t.count < 0.0) throw Error("execute", "invalid-histogram", "negative count");
    truth_total += t.count;
  }
  if (!(pred_total > 0.0) || !(truth_total > 0.0))
    throw Error("execute", "zero-mass", "EMD requires positive mass on both sides");

  std::vector<std::string> texts;
  for (const auto& p : predicted) texts.push_back(p.label);
  for (const auto& t : truth) texts.push_back(t.label);
  const std::size_t d = label_embedder.dimension();
  std::vector<float> vectors(texts.size() * d);
  label_embedder.embed_batch(texts, vectors.data());

  auto cosine = [&](std::size_t a, std::size_t b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double x = vectors[a * d + j], y = vectors[b * d + j];
      dot += x * y;
      na += x * x;
      nb += y * y;
    }
    if (!(na > 0.0) || !(nb > 0.0)) return 0.0;
    return dot / std::sqrt(na * nb);
  };

  std::vector<std::vector<double>> cost(predicted.size(),
                                        std::vector<double>(truth.size(), 0.0));
  for (std::size_t i = 0; i < predicted.size(); ++i)
    for (std::size_t j = 0; j < truth.size(); ++j) {
      if (predicted[i].label == truth[j].label) continue;  // self distance is exactly 0
      cost[i][j] = std::max(0.0, 1.0 - cosine(i, predicted.size() + j));
    }

  std::vector<double> supply, demand;
  for (const auto& p : predicted) supply.push_back(p.count / pred_total);
  for (const auto& t : truth) demand.push_back(t.count / truth_total);
  return solve_transport(supply, demand, cost);
}

}  // namespace uqe
