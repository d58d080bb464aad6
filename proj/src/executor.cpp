#include "uqe/plan/executor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace uqe {

namespace {

struct Partition {
  std::vector<std::size_t> structured_true;
  std::vector<std::size_t> candidates;  // true + residual, ascending
  std::unordered_map<std::size_t, uql::DnfFormula> residuals;
};

Partition partition_rows(const Table& table, const std::optional<uql::DnfFormula>& where) {
  Partition part;
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    if (!where) {
      part.structured_true.push_back(i);
      part.candidates.push_back(i);
      continue;
    }
    auto simplified = simplify_dnf(*where, table, i);
    switch (simplified.outcome) {
      case SimplifyOutcome::True:
        part.structured_true.push_back(i);
        part.candidates.push_back(i);
        break;
      case SimplifyOutcome::Residual:
        part.residuals.emplace(i, std::move(simplified.residual));
        part.candidates.push_back(i);
        break;
      case SimplifyOutcome::False:
        break;
    }
  }
  return part;
}

const Kernel* find_kernel(const Plan& plan, KernelKind kind) {
  for (const auto& k : plan.kernels)
    if (k.kind == kind) return &k;
  return nullptr;
}

std::string agg_default_name(const uql::AggCall& agg) {
  const char* op = agg.op == uql::AggCall::Op::Count ? "count"
                   : agg.op == uql::AggCall::Op::Avg ? "avg"
                                                     : "sum";
  return std::string(op) + "(" + (agg.column ? *agg.column : "*") + ")";
}

// run `fn(k)` for k in [0, n) fanned out over at most `parallelism` threads;
// the first exception wins and is rethrown on the calling thread
template <typename Fn>
void parallel_for(std::int64_t n, int parallelism, Fn&& fn) {
  std::exception_ptr failure;
#ifdef _OPENMP
  int threads = std::max(1, std::min<int>(parallelism, static_cast<int>(n > 0 ? n : 1)));
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
  for (std::int64_t k = 0; k < n; ++k) {
    try {
      fn(static_cast<std::size_t>(k));
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
      {
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------

class NonAggExecutor {
 public:
  NonAggExecutor(const Plan& plan, const uql::QueryAst& ast, const Table& table,
                 const SemanticBinding& binding, OracleBackend& oracle,
                 EmbeddingProvider& embedder, EmbeddingCache* cache, const ExecConfig& config)
      : plan_(plan), ast_(ast), table_(table), binding_(binding), oracle_(oracle),
        embedder_(embedder), cache_(cache), config_(config) {}

  Diagnostics diagnostics;

  QueryOutput run() {
    auto part = partition_rows(table_, ast_.where_dnf);
    const Kernel* fused = find_kernel(plan_, KernelKind::FusedWhereLimit);

    std::vector<std::size_t> satisfying;
    if (!ast_.where_dnf) {
      satisfying = part.candidates;
    } else if (config_.exact || part.residuals.size() <= config_.retrieval_budget) {
      satisfying = exact_scan(part, fused ? fused->limit : std::nullopt);
    } else {
      satisfying = budgeted_search(part, fused ? fused->limit : std::nullopt);
    }

    if (fused && fused->limit &&
        satisfying.size() > static_cast<std::size_t>(*fused->limit))
      satisfying.resize(static_cast<std::size_t>(*fused->limit));

    if (const Kernel* order = find_kernel(plan_, KernelKind::OrderBy))
      sort_rows(satisfying, *order->order_by);

    if (const Kernel* limit = find_kernel(plan_, KernelKind::Limit))
      if (satisfying.size() > static_cast<std::size_t>(*limit->limit))
        satisfying.resize(static_cast<std::size_t>(*limit->limit));

    return build_output(satisfying);
  }

 private:
  bool row_satisfies(const Partition& part, std::size_t row) {
    auto it = part.residuals.find(row);
    if (it == part.residuals.end()) return true;
    return evaluate_residual(it->second, RowRef{&table_, row}, oracle_, binding_);
  }

  // Ingestion-order scan with batched judging; with a fused LIMIT it stops
  // once `target` satisfying rows are confirmed, which yields exactly the
  // lowest-index positives.
  std::vector<std::size_t> exact_scan(const Partition& part,
                                      std::optional<std::int64_t> target) {
    std::vector<std::size_t> satisfying;
    const std::size_t want =
        target ? static_cast<std::size_t>(*target) : part.candidates.size();
    std::size_t pos = 0;
    while (pos < part.candidates.size() && satisfying.size() < want) {
      std::size_t chunk = target ? std::max<std::size_t>(config_.batch_size, 1)
                                 : part.candidates.size() - pos;
      chunk = std::min(chunk, part.candidates.size() - pos);
      std::vector<char> ok(chunk, 0);
      parallel_for(static_cast<std::int64_t>(chunk), config_.parallelism,
                   [&](std::size_t k) {
                     ok[k] = row_satisfies(part, part.candidates[pos + k]) ? 1 : 0;
                   });
      for (std::size_t k = 0; k < chunk && satisfying.size() < want; ++k)
        if (ok[k]) satisfying.push_back(part.candidates[pos + k]);
      pos += chunk;
    }
    return satisfying;
  }

  std::vector<std::size_t> budgeted_search(const Partition& part,
                                           std::optional<std::int64_t> limit) {
    std::vector<std::size_t> satisfying = part.structured_true;
    std::vector<std::size_t> residual_rows;
    for (std::size_t i : part.candidates)
      if (part.residuals.count(i)) residual_rows.push_back(i);

    std::optional<std::size_t> stop_after;
    if (limit) {
      if (satisfying.size() >= static_cast<std::size_t>(*limit)) {
        std::sort(satisfying.begin(), satisfying.end());
        return satisfying;
      }
      stop_after = static_cast<std::size_t>(*limit) - satisfying.size();
    }

    auto columns = table_.schema().unstructured_columns();
    EmbeddingMatrix embeddings = cache_ ? cache_->get_or_embed(table_, columns, embedder_)
                                        : embed_table(table_, columns, embedder_);

    SearchConfig scfg;
    scfg.budget = std::min(config_.retrieval_budget, residual_rows.size());
    scfg.batch_size = config_.batch_size;
    scfg.seed = config_.seed;
    scfg.parallelism = config_.parallelism;
    scfg.stop_after_positives = stop_after;

    auto label = [&](std::size_t row) -> char {
      return evaluate_residual(part.residuals.at(row), RowRef{&table_, row}, oracle_,
                               binding_)
                 ? 1
                 : 0;
    };
    auto outcome = search_with(residual_rows, label, embeddings, scfg);
    diagnostics.recall_trace = outcome.state.trace;
    if (outcome.state.aborted) {
      diagnostics.aborted = true;
      diagnostics.error = outcome.state.error;
    }
    satisfying.insert(satisfying.end(), outcome.positives.begin(), outcome.positives.end());
    std::sort(satisfying.begin(), satisfying.end());
    return satisfying;
  }

  void sort_rows(std::vector<std::size_t>& rows, const uql::OrderByClause& order) {
    std::vector<std::size_t> key_columns;
    for (const auto& key : order.keys) {
      if (key.kind != uql::OrderByKey::Kind::Column)
        throw Error("execute", "order-by-concrete", "ORDER BY requires a concrete column");
      auto j = table_.schema().index_of(key.text);
      if (!j)
        throw Error("execute", "unknown-column", "unknown column '" + key.text + "'");
      key_columns.push_back(*j);
    }
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      for (std::size_t j : key_columns) {
        const Value& va = table_.cell(a, j);
        const Value& vb = table_.cell(b, j);
        if (va.is_null() && vb.is_null()) continue;
        if (va.is_null()) return false;  // nulls last
        if (vb.is_null()) return true;
        int c = compare_values(va, vb);
        if (c != 0) return order.descending ? c > 0 : c < 0;
      }
      return a < b;
    });
  }

  QueryOutput build_output(const std::vector<std::size_t>& rows) {
    struct OutputColumn {
      ColumnSpec spec;
      bool extraction = false;
      std::size_t source_index = 0;  // schema column or extraction slot
    };
    std::vector<OutputColumn> columns;
    std::vector<std::string> extraction_texts;
    for (const auto& item : ast_.select) {
      if (std::holds_alternative<uql::SelectItem::Star>(item.node)) {
        for (std::size_t j = 0; j < table_.schema().size(); ++j)
          columns.push_back({table_.schema().at(j), false, j});
      } else if (auto* col = std::get_if<uql::SelectItem::ColumnRef>(&item.node)) {
        auto j = table_.schema().index_of(col->name);
        if (!j)
          throw Error("execute", "unknown-column", "unknown column '" + col->name + "'");
        ColumnSpec spec = table_.schema().at(*j);
        if (col->alias) spec.name = *col->alias;
        columns.push_back({std::move(spec), false, *j});
      } else if (auto* sem = std::get_if<uql::SelectItem::SemanticLiteral>(&item.node)) {
        ColumnSpec spec;
        spec.name = sem->alias ? *sem->alias : sem->text;
        spec.kind = ColumnKind::Structured;
        spec.type = ValueType::Text;
        columns.push_back({std::move(spec), true, extraction_texts.size()});
        extraction_texts.push_back(sem->text);
      } else {
        throw Error("execute", "unsupported-literal", "unsupported literal position");
      }
    }

    // extractions sharing a source column are batched into one call per row
    std::vector<std::vector<std::string>> extracted(
        rows.size(), std::vector<std::string>(extraction_texts.size()));
    if (!extraction_texts.empty()) {
      std::map<std::string, std::vector<std::size_t>> by_source;
      for (std::size_t s = 0; s < extraction_texts.size(); ++s)
        by_source[binding_.source_for(extraction_texts[s])].push_back(s);
      parallel_for(static_cast<std::int64_t>(rows.size()), config_.parallelism,
                   [&](std::size_t r) {
                     for (const auto& [source, slots] : by_source) {
                       std::vector<std::string> attrs;
                       for (std::size_t s : slots) attrs.push_back(extraction_texts[s]);
                       auto values = oracle_.extract(RowRef{&table_, rows[r]}, attrs, source);
                       for (std::size_t k = 0; k < slots.size(); ++k)
                         extracted[r][slots[k]] = values[k];
                     }
                   });
    }

    std::vector<ColumnSpec> specs;
    for (const auto& c : columns) specs.push_back(c.spec);
    std::vector<Row> out_rows;
    out_rows.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      Row row;
      row.reserve(columns.size());
      for (const auto& c : columns)
        row.push_back(c.extraction ? Value::text(extracted[r][c.source_index])
                                   : table_.cell(rows[r], c.source_index));
      out_rows.push_back(std::move(row));
    }
    diagnostics.source_rows = rows;
    return {Table(Schema(std::move(specs)), std::move(out_rows)), {}};
  }

  const Plan& plan_;
  const uql::QueryAst& ast_;
  const Table& table_;
  const SemanticBinding& binding_;
  OracleBackend& oracle_;
  EmbeddingProvider& embedder_;
  EmbeddingCache* cache_;
  const ExecConfig& config_;
};

// ---------------------------------------------------------------------------

class AggExecutor {
 public:
  AggExecutor(const Plan& plan, const uql::QueryAst& ast, const Table& table,
              const SemanticBinding& binding, OracleBackend& oracle,
              EmbeddingProvider& embedder, EmbeddingCache* cache, const ExecConfig& config)
      : plan_(plan), ast_(ast), table_(table), binding_(binding), oracle_(oracle),
        embedder_(embedder), cache_(cache), config_(config) {}

  Diagnostics diagnostics;

  QueryOutput run() {
    part_ = partition_rows(table_, ast_.where_dnf);
    population_ = part_.candidates.size();
    const bool has_group_by = !ast_.group_by.empty();
    const bool fused_gbw = find_kernel(plan_, KernelKind::FusedGroupByWhere) != nullptr;

    if (part_.candidates.empty())
      return has_group_by ? finalize_groups({}, {}, 0.0) : finalize_plain({}, {}, 0.0, nullptr);

    // Semantic GROUP BY classification costs one oracle row-unit per sampled
    // row, so those queries only go exact when the budget covers every
    // candidate; otherwise just the residual rows need judging.
    bool semantic_group_key = false;
    for (const auto& key : ast_.group_by)
      semantic_group_key = semantic_group_key || key.semantic;
    const std::size_t oracle_rows_needed =
        semantic_group_key ? part_.candidates.size() : part_.residuals.size();
    const bool exact = config_.exact || oracle_rows_needed <= config_.aggregation_budget;

    std::vector<std::size_t> sampled;
    std::vector<double> weights;
    double normalizer = 0.0;
    std::optional<Clustering> clustering;

    if (exact) {
      sampled = part_.candidates;
      weights.assign(sampled.size(), 1.0);
      normalizer = static_cast<double>(sampled.size());
    } else {
      auto columns = table_.schema().unstructured_columns();
      EmbeddingMatrix embeddings = cache_ ? cache_->get_or_embed(table_, columns, embedder_)
                                          : embed_table(table_, columns, embedder_);
      clustering = cluster(embeddings, config_.clusters, config_.seed);
      std::string warning;
      std::tie(sampled, weights) =
          stratified_subset(part_.candidates, *clustering, config_.aggregation_budget,
                            config_.seed + 1, &warning);
      if (!warning.empty()) diagnostics.warnings.push_back(warning);
      for (double w : weights) normalizer += w;
    }

    for (std::size_t row : sampled)
      if (!part_.residuals.count(row)) satisfied_[row] = 1;

    if (!fused_gbw) {
      // judge sampled residual rows up front, fanned out
      std::vector<std::size_t> to_judge;
      for (std::size_t row : sampled)
        if (part_.residuals.count(row)) to_judge.push_back(row);
      std::vector<char> ok(to_judge.size(), 0);
      parallel_for(static_cast<std::int64_t>(to_judge.size()), config_.parallelism,
                   [&](std::size_t k) {
                     ok[k] = evaluate_residual(part_.residuals.at(to_judge[k]),
                                               RowRef{&table_, to_judge[k]}, oracle_, binding_)
                                 ? 1
                                 : 0;
                   });
      for (std::size_t k = 0; k < to_judge.size(); ++k) satisfied_[to_judge[k]] = ok[k];
    }

    if (!has_group_by)
      return finalize_plain(sampled, weights, normalizer,
                            clustering ? &*clustering : nullptr);
    return run_group_by(sampled, weights, normalizer, fused_gbw);
  }

 private:
  bool judge_row(std::size_t row) {
    auto it = satisfied_.find(row);
    if (it != satisfied_.end()) return it->second != 0;
    bool ok = evaluate_residual(part_.residuals.at(row), RowRef{&table_, row}, oracle_,
                                binding_);
    satisfied_[row] = ok ? 1 : 0;
    return ok;
  }

  std::pair<std::vector<std::size_t>, std::vector<double>> stratified_subset(
      const std::vector<std::size_t>& candidates, const Clustering& clustering,
      std::size_t budget, std::uint64_t seed, std::string* warning) {
    budget = std::min(budget, candidates.size());
    std::vector<std::vector<std::size_t>> members;
    std::unordered_map<std::size_t, std::size_t> dense;
    for (std::size_t row : candidates) {
      std::size_t c = clustering.assignment[row];
      auto it = dense.find(c);
      if (it == dense.end()) {
        it = dense.emplace(c, members.size()).first;
        members.emplace_back();
      }
      members[it->second].push_back(row);
    }
    std::mt19937_64 rng(seed);
    auto partial_draw = [&](std::vector<std::size_t> pool, std::size_t take) {
      for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
      }
      pool.resize(take);
      return pool;
    };
    std::vector<std::pair<std::size_t, double>> picked;
    if (budget < members.size()) {
      if (warning)
        *warning = "budget " + std::to_string(budget) + " below stratum count " +
                   std::to_string(members.size()) + "; falling back to uniform sampling";
      double w = static_cast<double>(candidates.size()) / static_cast<double>(budget);
      for (std::size_t row : partial_draw(candidates, budget)) picked.emplace_back(row, w);
    } else {
      std::vector<std::size_t> sizes;
      for (const auto& m : members) sizes.push_back(m.size());
      auto alloc = allocate_stratified(sizes, budget);
      for (std::size_t s = 0; s < members.size(); ++s) {
        double w = static_cast<double>(sizes[s]) / static_cast<double>(alloc[s]);
        for (std::size_t row : partial_draw(members[s], alloc[s])) picked.emplace_back(row, w);
      }
    }
    std::sort(picked.begin(), picked.end());
    std::vector<std::size_t> rows;
    std::vector<double> ws;
    for (auto& [row, w] : picked) {
      rows.push_back(row);
      ws.push_back(w);
    }
    return {rows, ws};
  }

  struct GroupAccumulator {
    double weight_sum = 0.0;
    std::map<std::string, double> weighted_value;
    std::map<std::string, double> value_weight;
  };

  QueryOutput run_group_by(const std::vector<std::size_t>& sampled,
                           const std::vector<double>& weights, double normalizer,
                           bool fused) {
    auto probe = taxonomy_probe_order(table_.num_rows(), config_.seed);
    std::vector<std::size_t> rank(table_.num_rows());
    for (std::size_t p = 0; p < probe.size(); ++p) rank[probe[p]] = p;

    std::vector<std::size_t> by_probe = sampled;
    std::sort(by_probe.begin(), by_probe.end(),
              [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });

    std::vector<const uql::GroupByKey*> semantic_keys;
    for (const auto& key : ast_.group_by)
      if (key.semantic) semantic_keys.push_back(&key);

    // taxonomy bootstrap: first satisfying rows along the probe order; on
    // the fused path the bootstrap judges lazily (plain judge calls)
    std::map<std::string, Taxonomy> taxonomies;
    if (!semantic_keys.empty()) {
      std::vector<RowRef> tax_sample;
      for (std::size_t row : by_probe) {
        if (tax_sample.size() >= config_.taxonomy_budget) break;
        if (judge_row(row)) tax_sample.push_back(RowRef{&table_, row});
      }
      if (tax_sample.empty()) return finalize_groups({}, {}, normalizer);
      for (const auto* key : semantic_keys)
        taxonomies.emplace(key->text,
                           oracle_.build_taxonomy(tax_sample, key->text,
                                                  binding_.source_for(key->text),
                                                  config_.taxonomy_budget));
    }

    std::map<std::vector<std::string>, GroupAccumulator> groups;
    for (std::size_t k = 0; k < sampled.size(); ++k) {
      const std::size_t row = sampled[k];
      bool ok;
      std::vector<std::vector<std::size_t>> cats;  // per semantic key
      if (fused && !satisfied_.count(row) && !semantic_keys.empty()) {
        // satisfaction unknown: one combined call covers the judgment and
        // the first key's classification
        const auto* key0 = semantic_keys.front();
        auto [verdict, result] = oracle_.judge_and_classify(
            RowRef{&table_, row}, residual_condition(row), taxonomies.at(key0->text),
            binding_.source_for(key0->text));
        satisfied_[row] = verdict ? 1 : 0;
        ok = verdict;
        if (ok) {
          if (result.unmapped) ++diagnostics.unmapped_rows;
          cats.push_back(result.categories);
          for (std::size_t s = 1; s < semantic_keys.size(); ++s)
            cats.push_back(classify_row(row, taxonomies, *semantic_keys[s]));
        }
      } else {
        ok = judge_row(row);
        if (ok)
          for (const auto* key : semantic_keys)
            cats.push_back(classify_row(row, taxonomies, *key));
      }
      if (!ok) continue;
      accumulate_groups(groups, taxonomies, row, weights[k], cats);
    }
    return finalize_groups(std::move(groups), taxonomies, normalizer);
  }

  std::vector<std::size_t> classify_row(std::size_t row,
                                        const std::map<std::string, Taxonomy>& taxonomies,
                                        const uql::GroupByKey& key) {
    auto r = oracle_.classify(RowRef{&table_, row}, taxonomies.at(key.text),
                              binding_.source_for(key.text));
    if (r.unmapped) ++diagnostics.unmapped_rows;
    return r.categories;
  }

  Condition residual_condition(std::size_t row) {
    const auto& residual = part_.residuals.at(row);
    Condition cond;
    if (residual.disjuncts.size() == 1 && residual.disjuncts[0].size() == 1) {
      cond.text = residual.disjuncts[0][0].semantic().text;
    } else {
      for (std::size_t d = 0; d < residual.disjuncts.size(); ++d) {
        if (d) cond.text += " OR ";
        for (std::size_t p = 0; p < residual.disjuncts[d].size(); ++p) {
          if (p) cond.text += " AND ";
          cond.text += residual.disjuncts[d][p].semantic().text;
        }
      }
    }
    cond.source_columns = {binding_.source_for(residual.disjuncts[0][0].semantic().text)};
    return cond;
  }

  void accumulate_groups(std::map<std::vector<std::string>, GroupAccumulator>& groups,
                         const std::map<std::string, Taxonomy>& taxonomies, std::size_t row,
                         double weight,
                         const std::vector<std::vector<std::size_t>>& cats) {
    std::vector<std::vector<std::string>> key_options;
    std::size_t sem_slot = 0;
    for (const auto& key : ast_.group_by) {
      if (key.semantic) {
        const auto& tax = taxonomies.at(key.text);
        std::vector<std::string> labels;
        for (std::size_t c : cats[sem_slot]) labels.push_back(tax.categories[c].label);
        key_options.push_back(std::move(labels));
        ++sem_slot;
      } else {
        auto j = table_.schema().index_of(key.text);
        key_options.push_back({table_.cell(row, *j).render()});
      }
    }
    std::vector<std::vector<std::string>> tuples{{}};
    for (const auto& options : key_options) {
      std::vector<std::vector<std::string>> next;
      for (const auto& t : tuples)
        for (const auto& o : options) {
          auto copy = t;
          copy.push_back(o);
          next.push_back(std::move(copy));
        }
      tuples = std::move(next);
    }
    for (auto& tuple : tuples) add_row(groups[tuple], row, weight);
  }

  void add_row(GroupAccumulator& acc, std::size_t row, double weight) {
    acc.weight_sum += weight;
    for (const auto& item : ast_.select) {
      auto* agg = std::get_if<uql::AggCall>(&item.node);
      if (!agg || !agg->column) continue;
      auto j = table_.schema().index_of(*agg->column);
      const Value& v = table_.cell(row, *j);
      if (v.is_null()) continue;
      if (!v.is_numeric())
        throw Error("execute", "type-mismatch",
                    "aggregation operand '" + *agg->column + "' is not numeric");
      acc.weighted_value[*agg->column] += weight * v.as_float();
      acc.value_weight[*agg->column] += weight;
    }
  }

  QueryOutput finalize_plain(const std::vector<std::size_t>& sampled,
                             const std::vector<double>& weights, double normalizer,
                             const Clustering* clustering) {
    GroupAccumulator acc;
    std::vector<char> mask(sampled.size(), 0);
    for (std::size_t k = 0; k < sampled.size(); ++k) {
      if (judge_row(sampled[k])) {
        mask[k] = 1;
        add_row(acc, sampled[k], weights[k]);
      }
    }
    diagnostics.standard_error =
        clustering && !sampled.empty() ? stratified_count_se(sampled, weights, mask, *clustering)
                                       : 0.0;
    std::map<std::vector<std::string>, GroupAccumulator> groups;
    groups.emplace(std::vector<std::string>{}, std::move(acc));
    return finalize_groups(std::move(groups), {}, normalizer);
  }

  double stratified_count_se(const std::vector<std::size_t>& sampled,
                             const std::vector<double>& weights,
                             const std::vector<char>& satisfying,
                             const Clustering& clustering) {
    std::map<std::size_t, std::vector<std::size_t>> by_stratum;
    for (std::size_t k = 0; k < sampled.size(); ++k)
      by_stratum[clustering.assignment[sampled[k]]].push_back(k);
    double variance = 0.0;
    for (const auto& [c, ks] : by_stratum) {
      if (ks.size() < 2) continue;
      const double n_k = static_cast<double>(ks.size());
      const double big_n = weights[ks.front()] * n_k;  // stratum candidates
      double mean = 0.0;
      for (std::size_t k : ks) mean += satisfying[k];
      mean /= n_k;
      double s2 = 0.0;
      for (std::size_t k : ks) {
        double d = static_cast<double>(satisfying[k]) - mean;
        s2 += d * d;
      }
      s2 /= (n_k - 1.0);
      variance += big_n * big_n * (s2 / n_k) * std::max(0.0, 1.0 - n_k / big_n);
    }
    return std::sqrt(std::max(0.0, variance));
  }

  QueryOutput finalize_groups(std::map<std::vector<std::string>, GroupAccumulator> groups,
                              const std::map<std::string, Taxonomy>& taxonomies,
                              double normalizer) {
    (void)taxonomies;
    const double population = static_cast<double>(population_);

    struct Slot {
      enum class What { Key, Count, CountColumn, Sum, Avg } what;
      std::size_t key_index = 0;
      std::string column;
    };
    std::vector<ColumnSpec> specs;
    std::vector<Slot> slots;
    for (const auto& item : ast_.select) {
      if (auto* agg = std::get_if<uql::AggCall>(&item.node)) {
        ColumnSpec spec;
        spec.name = agg->alias ? *agg->alias : agg_default_name(*agg);
        spec.type = ValueType::Float;
        specs.push_back(spec);
        Slot slot;
        if (agg->op == uql::AggCall::Op::Count)
          slot.what = agg->column ? Slot::What::CountColumn : Slot::What::Count;
        else
          slot.what = agg->op == uql::AggCall::Op::Sum ? Slot::What::Sum : Slot::What::Avg;
        if (agg->column) slot.column = *agg->column;
        slots.push_back(slot);
      } else if (std::holds_alternative<uql::SelectItem::Star>(item.node)) {
        for (std::size_t g = 0; g < ast_.group_by.size(); ++g) {
          specs.push_back(key_spec(g, nullptr));
          slots.push_back({Slot::What::Key, g, ""});
        }
      } else {
        std::size_t g = resolve_group_key(item);
        specs.push_back(key_spec(g, &item));
        slots.push_back({Slot::What::Key, g, ""});
      }
    }

    std::vector<Row> out_rows;
    for (auto& [key, acc] : groups) {
      Row row;
      for (const auto& slot : slots) {
        switch (slot.what) {
          case Slot::What::Key:
            row.push_back(Value::text(key[slot.key_index]));
            break;
          case Slot::What::Count:
            row.push_back(Value::real(
                normalizer > 0.0 ? population * acc.weight_sum / normalizer : 0.0));
            break;
          case Slot::What::CountColumn:
            row.push_back(Value::real(normalizer > 0.0 ? population *
                                                             acc.value_weight[slot.column] /
                                                             normalizer
                                                       : 0.0));
            break;
          case Slot::What::Sum:
            row.push_back(Value::real(normalizer > 0.0
                                          ? population * acc.weighted_value[slot.column] /
                                                normalizer
                                          : 0.0));
            break;
          case Slot::What::Avg: {
            double denom = acc.value_weight[slot.column];
            if (denom > 0.0)
              row.push_back(Value::real(acc.weighted_value[slot.column] / denom));
            else
              row.push_back(Value());  // empty-result marker
            break;
          }
        }
      }
      out_rows.push_back(std::move(row));
    }
    Table result(Schema(std::move(specs)), std::move(out_rows));
    return {apply_output_order_limit(std::move(result)), {}};
  }

  ColumnSpec key_spec(std::size_t g, const uql::SelectItem* item) {
    const auto& key = ast_.group_by[g];
    ColumnSpec spec;
    spec.type = ValueType::Text;
    spec.name = key.alias ? *key.alias : key.text;
    if (item) {
      if (auto* col = std::get_if<uql::SelectItem::ColumnRef>(&item->node))
        spec.name = col->alias ? *col->alias : col->name;
      if (auto* sem = std::get_if<uql::SelectItem::SemanticLiteral>(&item->node))
        if (sem->alias) spec.name = *sem->alias;
    }
    return spec;
  }

  std::size_t resolve_group_key(const uql::SelectItem& item) {
    for (std::size_t g = 0; g < ast_.group_by.size(); ++g) {
      const auto& key = ast_.group_by[g];
      if (auto* col = std::get_if<uql::SelectItem::ColumnRef>(&item.node)) {
        if (key.alias && col->name == *key.alias) return g;
        if (!key.semantic && key.text == col->name) return g;
      }
      if (auto* sem = std::get_if<uql::SelectItem::SemanticLiteral>(&item.node)) {
        if (key.semantic && key.text == sem->text) return g;
        if (key.alias && sem->alias && *key.alias == *sem->alias) return g;
      }
    }
    throw Error("execute", "invalid-select",
                "select item must reference a GROUP BY key or an aggregation in "
                "aggregation queries");
  }

  Table apply_output_order_limit(Table result) {
    std::vector<std::size_t> order(result.num_rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (const Kernel* ob = find_kernel(plan_, KernelKind::OrderBy)) {
      std::vector<std::size_t> cols;
      for (const auto& key : ob->order_by->keys) {
        if (key.kind != uql::OrderByKey::Kind::Column)
          throw Error("execute", "order-by-concrete", "ORDER BY requires a concrete column");
        auto j = result.schema().index_of(key.text);
        if (!j)
          throw Error("execute", "unknown-column",
                      "ORDER BY key '" + key.text + "' is not an output column");
        cols.push_back(*j);
      }
      bool desc = ob->order_by->descending;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        for (std::size_t j : cols) {
          const Value& va = result.cell(a, j);
          const Value& vb = result.cell(b, j);
          if (va.is_null() && vb.is_null()) continue;
          if (va.is_null()) return false;
          if (vb.is_null()) return true;
          int c = compare_values(va, vb);
          if (c != 0) return desc ? c > 0 : c < 0;
        }
        return a < b;
      });
    }
    std::size_t keep = result.num_rows();
    if (const Kernel* lim = find_kernel(plan_, KernelKind::Limit))
      keep = std::min<std::size_t>(keep, static_cast<std::size_t>(*lim->limit));
    std::vector<Row> rows;
    for (std::size_t i = 0; i < keep; ++i) rows.push_back(result.row(order[i]));
    return Table(result.schema(), std::move(rows));
  }

  const Plan& plan_;
  const uql::QueryAst& ast_;
  const Table& table_;
  const SemanticBinding& binding_;
  OracleBackend& oracle_;
  EmbeddingProvider& embedder_;
  EmbeddingCache* cache_;
  const ExecConfig& config_;

  Partition part_;
  std::size_t population_ = 0;
  std::unordered_map<std::size_t, char> satisfied_;
};

}  // namespace

bool evaluate_residual(const uql::DnfFormula& residual, const RowRef& row,
                       OracleBackend& oracle, const SemanticBinding& binding) {
  std::map<std::string, bool> memo;
  for (const auto& conj : residual.disjuncts) {
    bool all = true;
    for (const auto& pred : conj) {
      const std::string& text = pred.semantic().text;
      auto it = memo.find(text);
      if (it == memo.end()) {
        Condition cond{text, {binding.source_for(text)}};
        it = memo.emplace(text, oracle.judge(row, cond)).first;
      }
      if (!it->second) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

void validate_query(const uql::QueryAst& ast, const Schema& schema) {
  auto known_column = [&](const std::string& name) {
    return schema.index_of(name).has_value();
  };
  const auto query_class = uql::classify(ast);

  for (const auto& key : ast.group_by) {
    if (key.semantic) continue;
    auto j = schema.index_of(key.text);
    if (!j)
      throw Error("validate", "unknown-column", "unknown GROUP BY column '" + key.text + "'");
    if (schema.at(*j).kind == ColumnKind::Unstructured)
      throw Error("validate", "type-mismatch",
                  "GROUP BY on unstructured column '" + key.text + "' needs a semantic key");
  }

  auto is_group_alias = [&](const std::string& name) {
    for (const auto& key : ast.group_by)
      if (key.alias && *key.alias == name) return true;
    return false;
  };

  for (const auto& item : ast.select) {
    if (std::holds_alternative<uql::SelectItem::IntegerLiteral>(item.node))
      throw Error("validate", "unsupported-literal", "unsupported literal position");
    if (auto* col = std::get_if<uql::SelectItem::ColumnRef>(&item.node)) {
      if (!known_column(col->name) && !is_group_alias(col->name))
        throw Error("validate", "unknown-column", "unknown column '" + col->name + "'");
    }
    if (auto* agg = std::get_if<uql::AggCall>(&item.node)) {
      if (agg->column) {
        auto j = schema.index_of(*agg->column);
        if (!j)
          throw Error("validate", "unknown-column",
                      "unknown aggregation column '" + *agg->column + "'");
        if (schema.at(*j).kind == ColumnKind::Unstructured)
          throw Error("validate", "type-mismatch",
                      "aggregation over unstructured column '" + *agg->column + "'");
      }
    }
    if (query_class == uql::QueryClass::Aggregation) {
      if (auto* sem = std::get_if<uql::SelectItem::SemanticLiteral>(&item.node)) {
        bool matches = false;
        for (const auto& key : ast.group_by) {
          if (key.semantic && key.text == sem->text) matches = true;
          if (key.alias && sem->alias && *key.alias == *sem->alias) matches = true;
        }
        if (!matches)
          throw Error("validate", "invalid-select",
                      "semantic SELECT in an aggregation query must match a GROUP BY key");
      }
    }
  }

  if (ast.order_by) {
    for (const auto& key : ast.order_by->keys) {
      if (key.kind == uql::OrderByKey::Kind::NlLiteral)
        throw Error("validate", "order-by-concrete", "ORDER BY requires a concrete column");
      if (key.kind == uql::OrderByKey::Kind::Integer)
        throw Error("validate", "unsupported-literal", "unsupported literal position");
      if (query_class == uql::QueryClass::NonAggregation) {
        auto j = schema.index_of(key.text);
        if (!j)
          throw Error("validate", "unknown-column",
                      "unknown ORDER BY column '" + key.text + "'");
        if (schema.at(*j).kind == ColumnKind::Unstructured)
          throw Error("validate", "type-mismatch",
                      "ORDER BY on unstructured column '" + key.text + "'");
      }
    }
  }

  if (ast.where_dnf) {
    for (const auto& conj : ast.where_dnf->disjuncts)
      for (const auto& pred : conj) {
        if (pred.is_semantic()) continue;
        auto j = schema.index_of(pred.comparison().column);
        if (!j)
          throw Error("validate", "unknown-column",
                      "unknown column '" + pred.comparison().column + "' in WHERE");
        if (schema.at(*j).kind == ColumnKind::Unstructured)
          throw Error("validate", "type-mismatch",
                      "comparison over unstructured column '" + pred.comparison().column +
                          "'");
      }
  }
}

std::vector<std::string> canonical_rows(const Table& table) {
  std::vector<std::string> rendered;
  rendered.reserve(table.num_rows());
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    std::string line;
    for (std::size_t j = 0; j < table.num_columns(); ++j) {
      if (j) line += "\x1f";
      line += table.cell(i, j).render();
    }
    rendered.push_back(std::move(line));
  }
  std::sort(rendered.begin(), rendered.end());
  return rendered;
}

QueryOutput execute_plan(const Plan& plan, const uql::QueryAst& ast, const Table& table,
                         const SemanticBinding& binding, OracleBackend& oracle,
                         EmbeddingProvider& embedder, EmbeddingCache* cache,
                         const ExecConfig& config) {
  const MeterSnapshot before = oracle.meter().snapshot();
  QueryOutput out;
  if (plan.query_class == uql::QueryClass::NonAggregation) {
    NonAggExecutor exec(plan, ast, table, binding, oracle, embedder, cache, config);
    out = exec.run();
    out.diagnostics = std::move(exec.diagnostics);
  } else {
    AggExecutor exec(plan, ast, table, binding, oracle, embedder, cache, config);
    out = exec.run();
    out.diagnostics = std::move(exec.diagnostics);
  }
  out.diagnostics.estimated_cost = plan.total_estimated_cost;
  out.diagnostics.oracle_usage = oracle.meter().snapshot() - before;
  return out;
}

}  // namespace uqe
