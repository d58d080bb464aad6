#include "uqe/table.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace uqe {

Schema::Schema(std::vector<ColumnSpec> columns) : columns_(std::move(columns)) {
  std::unordered_set<std::string> seen;
  for (const auto& c : columns_) {
    if (!seen.insert(c.name).second)
      throw Error("ingest", "duplicate-column", "duplicate column name '" + c.name + "'");
    if (c.kind == ColumnKind::Unstructured && c.type != ValueType::UnstructuredText &&
        c.type != ValueType::UnstructuredBlob)
      throw Error("ingest", "schema-violation",
                  "unstructured column '" + c.name + "' must have an unstructured value type");
    if (c.kind == ColumnKind::Structured &&
        (c.type == ValueType::UnstructuredText || c.type == ValueType::UnstructuredBlob))
      throw Error("ingest", "schema-violation",
                  "structured column '" + c.name + "' cannot have an unstructured value type");
    if (c.type == ValueType::EnumLabel && c.vocabulary.empty())
      throw Error("ingest", "schema-violation",
                  "enum column '" + c.name + "' declares no vocabulary");
  }
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j].name == name) return j;
  return std::nullopt;
}

std::vector<std::size_t> Schema::unstructured_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < columns_.size(); ++j)
    if (columns_[j].kind == ColumnKind::Unstructured) out.push_back(j);
  return out;
}

bool cell_conforms(const Value& v, const ColumnSpec& col) {
  if (v.is_null()) return true;
  if (v.type() != col.type) return false;
  if (col.type == ValueType::EnumLabel)
    return std::find(col.vocabulary.begin(), col.vocabulary.end(), v.as_string()) !=
           col.vocabulary.end();
  return true;
}

Table validate_table(Schema schema, std::vector<Row> rows) {
  const std::size_t m = schema.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m)
      throw Error("ingest", "arity-mismatch",
                  "row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                      " cells, schema has " + std::to_string(m) + " columns");
    for (std::size_t j = 0; j < m; ++j) {
      const auto& col = schema.at(j);
      if (!cell_conforms(rows[i][j], col)) {
        const char* what = col.type == ValueType::EnumLabel &&
                                   rows[i][j].type() == ValueType::EnumLabel
                               ? "unknown enum label"
                               : "type mismatch";
        throw Error("ingest",
                    col.type == ValueType::EnumLabel &&
                            rows[i][j].type() == ValueType::EnumLabel
                        ? "unknown-enum-label"
                        : "type-mismatch",
                    std::string(what) + " at (" + std::to_string(i) + ", " + col.name +
                        "): expected " + value_type_name(col.type) + ", got " +
                        value_type_name(rows[i][j].type()));
      }
    }
  }
  return Table(std::move(schema), std::move(rows));
}

StochasticTable::StochasticTable(const Table& base, std::vector<std::size_t> sample_indices,
                                 std::vector<double> weights, std::size_t population_size)
    : StochasticTable(base, std::move(sample_indices), std::move(weights), population_size,
                      0.0) {
  weight_normalizer_ = weight_sum();
}

StochasticTable::StochasticTable(const Table& base, std::vector<std::size_t> sample_indices,
                                 std::vector<double> weights, std::size_t population_size,
                                 double weight_normalizer)
    : base_(&base),
      sample_indices_(std::move(sample_indices)),
      weights_(std::move(weights)),
      population_size_(population_size),
      weight_normalizer_(weight_normalizer) {
  if (sample_indices_.size() != weights_.size())
    throw Error("execute", "invalid-sample", "index/weight arity mismatch");
  std::unordered_set<std::size_t> seen;
  for (std::size_t idx : sample_indices_) {
    if (idx >= base_->num_rows())
      throw Error("execute", "invalid-sample",
                  "sample index " + std::to_string(idx) + " out of range");
    if (!seen.insert(idx).second)
      throw Error("execute", "invalid-sample",
                  "duplicate sample index " + std::to_string(idx));
  }
  for (double w : weights_)
    if (!(w > 0.0))
      throw Error("execute", "invalid-sample", "non-positive importance weight");
}

double StochasticTable::weight_sum() const {
  double s = 0.0;
  for (double w : weights_) s += w;
  return s;
}

StochasticTable StochasticTable::filtered(const std::vector<bool>& keep) const {
  std::vector<std::size_t> idx;
  std::vector<double> w;
  for (std::size_t k = 0; k < sample_indices_.size(); ++k) {
    if (keep[k]) {
      idx.push_back(sample_indices_[k]);
      w.push_back(weights_[k]);
    }
  }
  return StochasticTable(*base_, std::move(idx), std::move(w), population_size_,
                         weight_normalizer_);
}

double weighted_aggregate(const StochasticTable& st, AggOp op,
                          const std::function<double(std::size_t)>& value_of) {
  if (st.sample_size() == 0 || !(st.weight_normalizer() > 0.0))
    throw Error("execute", "empty-sample", "aggregate over an empty sample");
  double weighted_sum = 0.0;
  double present_weight = 0.0;
  for (std::size_t k = 0; k < st.sample_size(); ++k) {
    const double w = st.weights()[k];
    weighted_sum += w * value_of(st.sample_indices()[k]);
    present_weight += w;
  }
  switch (op) {
    case AggOp::Count:
    case AggOp::Sum:
      return static_cast<double>(st.population_size()) * weighted_sum /
             st.weight_normalizer();
    case AggOp::Avg:
      return weighted_sum / present_weight;
  }
  return 0.0;
}

}  // namespace uqe
