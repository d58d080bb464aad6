#include "uqe/engine/reference.hpp"

#include <algorithm>
#include <map>

namespace uqe {

namespace {

bool row_passes(const uql::QueryAst& ast, const Table& table, std::size_t row,
                const SemanticBinding& binding, OracleBackend& oracle) {
  if (!ast.where_dnf) return true;
  for (const auto& conj : ast.where_dnf->disjuncts) {
    bool all = true;
    for (const auto& pred : conj) {
      bool v = pred.is_semantic()
                   ? oracle.judge(RowRef{&table, row},
                                  Condition{pred.semantic().text,
                                            {binding.source_for(pred.semantic().text)}})
                   : evaluate_structured_predicate(pred, table, row);
      if (!v) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

std::string agg_name(const uql::AggCall& agg) {
  const char* op = agg.op == uql::AggCall::Op::Count ? "count"
                   : agg.op == uql::AggCall::Op::Avg ? "avg"
                                                     : "sum";
  return agg.alias ? *agg.alias
                   : std::string(op) + "(" + (agg.column ? *agg.column : "*") + ")";
}

void sort_result(std::vector<Row>& rows, const Schema& schema,
                 const uql::OrderByClause& order) {
  std::vector<std::size_t> cols;
  for (const auto& key : order.keys) {
    if (key.kind != uql::OrderByKey::Kind::Column)
      throw Error("execute", "order-by-concrete", "ORDER BY requires a concrete column");
    auto j = schema.index_of(key.text);
    if (!j)
      throw Error("execute", "unknown-column",
                  "ORDER BY key '" + key.text + "' is not an output column");
    cols.push_back(*j);
  }
  std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
    for (std::size_t j : cols) {
      if (a[j].is_null() && b[j].is_null()) continue;
      if (a[j].is_null()) return false;
      if (b[j].is_null()) return true;
      int c = compare_values(a[j], b[j]);
      if (c != 0) return order.descending ? c > 0 : c < 0;
    }
    return false;
  });
}

}  // namespace

Table reference_evaluate(const uql::QueryAst& ast, const Table& table,
                         const SemanticBinding& binding, OracleBackend& oracle,
                         std::size_t taxonomy_budget, std::uint64_t seed) {
  // 1. WHERE over every row
  std::vector<std::size_t> satisfying;
  for (std::size_t i = 0; i < table.num_rows(); ++i)
    if (row_passes(ast, table, i, binding, oracle)) satisfying.push_back(i);

  const auto query_class = uql::classify(ast);

  if (query_class == uql::QueryClass::NonAggregation) {
    // 2. SELECT with per-row extraction
    struct Col {
      ColumnSpec spec;
      bool extraction;
      std::size_t index;  // schema column or extraction slot
    };
    std::vector<Col> columns;
    std::vector<std::string> extractions;
    for (const auto& item : ast.select) {
      if (std::holds_alternative<uql::SelectItem::Star>(item.node)) {
        for (std::size_t j = 0; j < table.schema().size(); ++j)
          columns.push_back({table.schema().at(j), false, j});
      } else if (auto* col = std::get_if<uql::SelectItem::ColumnRef>(&item.node)) {
        auto j = table.schema().index_of(col->name);
        if (!j)
          throw Error("execute", "unknown-column", "unknown column '" + col->name + "'");
        ColumnSpec spec = table.schema().at(*j);
        if (col->alias) spec.name = *col->alias;
        columns.push_back({std::move(spec), false, *j});
      } else if (auto* sem = std::get_if<uql::SelectItem::SemanticLiteral>(&item.node)) {
        ColumnSpec spec;
        spec.name = sem->alias ? *sem->alias : sem->text;
        spec.kind = ColumnKind::Structured;
        spec.type = ValueType::Text;
        columns.push_back({std::move(spec), true, extractions.size()});
        extractions.push_back(sem->text);
      } else {
        throw Error("execute", "unsupported-literal", "unsupported literal position");
      }
    }

    std::vector<ColumnSpec> specs;
    for (const auto& c : columns) specs.push_back(c.spec);
    std::vector<Row> rows;
    for (std::size_t i : satisfying) {
      std::vector<std::string> values(extractions.size());
      if (!extractions.empty()) {
        std::map<std::string, std::vector<std::size_t>> by_source;
        for (std::size_t s = 0; s < extractions.size(); ++s)
          by_source[binding.source_for(extractions[s])].push_back(s);
        for (const auto& [source, slots] : by_source) {
          std::vector<std::string> attrs;
          for (std::size_t s : slots) attrs.push_back(extractions[s]);
          auto out = oracle.extract(RowRef{&table, i}, attrs, source);
          for (std::size_t k = 0; k < slots.size(); ++k) values[slots[k]] = out[k];
        }
      }
      Row row;
      for (const auto& c : columns)
        row.push_back(c.extraction ? Value::text(values[c.index]) : table.cell(i, c.index));
      rows.push_back(std::move(row));
    }

    if (ast.order_by) {
      // order on source columns, ties by ingestion index
      std::vector<std::size_t> key_cols;
      for (const auto& key : ast.order_by->keys) {
        if (key.kind != uql::OrderByKey::Kind::Column)
          throw Error("execute", "order-by-concrete", "ORDER BY requires a concrete column");
        auto j = table.schema().index_of(key.text);
        if (!j)
          throw Error("execute", "unknown-column", "unknown column '" + key.text + "'");
        key_cols.push_back(*j);
      }
      std::vector<std::size_t> order(satisfying.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        for (std::size_t j : key_cols) {
          const Value& va = table.cell(satisfying[a], j);
          const Value& vb = table.cell(satisfying[b], j);
          if (va.is_null() && vb.is_null()) continue;
          if (va.is_null()) return false;
          if (vb.is_null()) return true;
          int c = compare_values(va, vb);
          if (c != 0) return ast.order_by->descending ? c > 0 : c < 0;
        }
        return satisfying[a] < satisfying[b];
      });
      std::vector<Row> sorted;
      for (std::size_t i : order) sorted.push_back(std::move(rows[i]));
      rows = std::move(sorted);
    }
    if (ast.limit && rows.size() > static_cast<std::size_t>(*ast.limit))
      rows.resize(static_cast<std::size_t>(*ast.limit));
    return Table(Schema(std::move(specs)), std::move(rows));
  }

  // ---- aggregation ----
  std::vector<const uql::GroupByKey*> semantic_keys;
  for (const auto& key : ast.group_by)
    if (key.semantic) semantic_keys.push_back(&key);

  // taxonomy from the canonical probe-order sample of satisfying rows
  std::map<std::string, Taxonomy> taxonomies;
  if (!semantic_keys.empty() && !satisfying.empty()) {
    auto probe = taxonomy_probe_order(table.num_rows(), seed);
    std::vector<std::size_t> rank(table.num_rows());
    for (std::size_t p = 0; p < probe.size(); ++p) rank[probe[p]] = p;
    std::vector<std::size_t> ordered = satisfying;
    std::sort(ordered.begin(), ordered.end(),
              [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
    std::vector<RowRef> sample;
    for (std::size_t i = 0; i < std::min(taxonomy_budget, ordered.size()); ++i)
      sample.push_back(RowRef{&table, ordered[i]});
    for (const auto* key : semantic_keys)
      taxonomies.emplace(key->text,
                         oracle.build_taxonomy(sample, key->text,
                                               binding.source_for(key->text),
                                               taxonomy_budget));
  }

  struct Acc {
    double count = 0.0;
    std::map<std::string, double> sum;
    std::map<std::string, double> non_null;
  };
  std::map<std::vector<std::string>, Acc> groups;
  for (std::size_t i : satisfying) {
    std::vector<std::vector<std::string>> key_options;
    for (const auto& key : ast.group_by) {
      if (key.semantic) {
        const auto& tax = taxonomies.at(key.text);
        auto r = oracle.classify(RowRef{&table, i}, tax, binding.source_for(key.text));
        std::vector<std::string> labels;
        for (std::size_t c : r.categories) labels.push_back(tax.categories[c].label);
        key_options.push_back(std::move(labels));
      } else {
        auto j = table.schema().index_of(key.text);
        key_options.push_back({table.cell(i, *j).render()});
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
    for (const auto& tuple : tuples) {
      Acc& acc = groups[tuple];
      acc.count += 1.0;
      for (const auto& item : ast.select) {
        auto* agg = std::get_if<uql::AggCall>(&item.node);
        if (!agg || !agg->column) continue;
        auto j = table.schema().index_of(*agg->column);
        if (!j)
          throw Error("execute", "unknown-column",
                      "unknown aggregation column '" + *agg->column + "'");
        const Value& v = table.cell(i, *j);
        if (v.is_null()) continue;
        acc.sum[*agg->column] += v.as_float();
        acc.non_null[*agg->column] += 1.0;
      }
    }
  }
  if (ast.group_by.empty() && groups.empty()) groups.emplace(std::vector<std::string>{}, Acc{});

  struct Slot {
    enum class What { Key, Count, CountColumn, Sum, Avg } what;
    std::size_t key_index = 0;
    std::string column;
  };
  std::vector<ColumnSpec> specs;
  std::vector<Slot> slots;
  for (const auto& item : ast.select) {
    if (auto* agg = std::get_if<uql::AggCall>(&item.node)) {
      ColumnSpec spec;
      spec.name = agg_name(*agg);
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
      for (std::size_t g = 0; g < ast.group_by.size(); ++g) {
        const auto& key = ast.group_by[g];
        ColumnSpec spec;
        spec.type = ValueType::Text;
        spec.name = key.alias ? *key.alias : key.text;
        specs.push_back(spec);
        slots.push_back({Slot::What::Key, g, ""});
      }
    } else {
      // group-key reference
      std::size_t found = ast.group_by.size();
      for (std::size_t g = 0; g < ast.group_by.size(); ++g) {
        const auto& key = ast.group_by[g];
        if (auto* col = std::get_if<uql::SelectItem::ColumnRef>(&item.node)) {
          if (key.alias && col->name == *key.alias) found = g;
          if (!key.semantic && key.text == col->name) found = g;
        }
        if (auto* sem = std::get_if<uql::SelectItem::SemanticLiteral>(&item.node)) {
          if (key.semantic && key.text == sem->text) found = g;
          if (key.alias && sem->alias && *key.alias == *sem->alias) found = g;
        }
      }
      if (found == ast.group_by.size())
        throw Error("execute", "invalid-select",
                    "select item must reference a GROUP BY key or an aggregation in "
                    "aggregation queries");
      const auto& key = ast.group_by[found];
      ColumnSpec spec;
      spec.type = ValueType::Text;
      spec.name = key.alias ? *key.alias : key.text;
      if (auto* col = std::get_if<uql::SelectItem::ColumnRef>(&item.node))
        spec.name = col->alias ? *col->alias : col->name;
      if (auto* sem = std::get_if<uql::SelectItem::SemanticLiteral>(&item.node))
        if (sem->alias) spec.name = *sem->alias;
      specs.push_back(spec);
      slots.push_back({Slot::What::Key, found, ""});
    }
  }

  const double population = static_cast<double>(satisfying.size());
  (void)population;
  std::vector<Row> rows;
  for (const auto& [key, acc] : groups) {
    Row row;
    for (const auto& slot : slots) {
      switch (slot.what) {
        case Slot::What::Key: row.push_back(Value::text(key[slot.key_index])); break;
        case Slot::What::Count: row.push_back(Value::real(acc.count)); break;
        case Slot::What::CountColumn:
          row.push_back(Value::real(acc.non_null.count(slot.column)
                                        ? acc.non_null.at(slot.column)
                                        : 0.0));
          break;
        case Slot::What::Sum:
          row.push_back(
              Value::real(acc.sum.count(slot.column) ? acc.sum.at(slot.column) : 0.0));
          break;
        case Slot::What::Avg: {
          double n = acc.non_null.count(slot.column) ? acc.non_null.at(slot.column) : 0.0;
          if (n > 0.0)
            row.push_back(Value::real(acc.sum.at(slot.column) / n));
          else
            row.push_back(Value());
          break;
        }
      }
    }
    rows.push_back(std::move(row));
  }

  Schema out_schema(std::move(specs));
  if (ast.order_by) sort_result(rows, out_schema, *ast.order_by);
  if (ast.limit && rows.size() > static_cast<std::size_t>(*ast.limit))
    rows.resize(static_cast<std::size_t>(*ast.limit));
  return Table(std::move(out_schema), std::move(rows));
}

}  // namespace uqe
