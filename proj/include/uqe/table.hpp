#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uqe/value.hpp"

namespace uqe {

enum class ColumnKind { Structured, Unstructured };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Structured;
  ValueType type = ValueType::Text;
  std::vector<std::string> vocabulary;  // enum columns only

  bool operator==(const ColumnSpec&) const = default;
};

class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<ColumnSpec> columns);

  std::size_t size() const { return columns_.size(); }
  const ColumnSpec& at(std::size_t j) const { return columns_[j]; }
  const std::vector<ColumnSpec>& columns() const { return columns_; }
  std::optional<std::size_t> index_of(std::string_view name) const;

  std::vector<std::size_t> unstructured_columns() const;

  bool operator==(const Schema&) const = default;

 private:
  std::vector<ColumnSpec> columns_;
};

using Row = std::vector<Value>;

/// Schema-typed row collection. Immutable after validation; rows are
/// semantically an unordered set, the ingestion index serves as row identity
/// for bookkeeping and deterministic tie-breaks only.
class Table {
 public:
  Table() = default;
  Table(Schema schema, std::vector<Row> rows)
      : schema_(std::move(schema)), rows_(std::move(rows)) {}

  const Schema& schema() const { return schema_; }
  std::size_t num_rows() const { return rows_.size(); }
  std::size_t num_columns() const { return schema_.size(); }
  const Row& row(std::size_t i) const { return rows_[i]; }
  const std::vector<Row>& rows() const { return rows_; }
  const Value& cell(std::size_t i, std::size_t j) const { return rows_[i][j]; }

  bool operator==(const Table&) const = default;

 private:
  Schema schema_;
  std::vector<Row> rows_;
};

/// Checks every row against the schema and returns the table. Reports the
/// first offending (row, column) on arity mismatch, type mismatch or unknown
/// enum label. A null cell conforms to any column.
Table validate_table(Schema schema, std::vector<Row> rows);

/// Whether `v` conforms to column spec `col` (null always conforms).
bool cell_conforms(const Value& v, const ColumnSpec& col);

enum class AggOp { Count, Sum, Avg };

/// Sampled rows carrying importance weights. `weight_normalizer` is the sum
/// of weights over every row the generating kernel judged, which may exceed
/// the sum over the rows kept here when a filter discarded non-satisfying
/// samples. Fresh sampler output always has normalizer == sum of weights.
class StochasticTable {
 public:
  StochasticTable(const Table& base, std::vector<std::size_t> sample_indices,
                  std::vector<double> weights, std::size_t population_size);
  StochasticTable(const Table& base, std::vector<std::size_t> sample_indices,
                  std::vector<double> weights, std::size_t population_size,
                  double weight_normalizer);

  const Table& base() const { return *base_; }
  const std::vector<std::size_t>& sample_indices() const { return sample_indices_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t population_size() const { return population_size_; }
  std::size_t sample_size() const { return sample_indices_.size(); }
  double weight_normalizer() const { return weight_normalizer_; }
  double weight_sum() const;

  const Row& sample_row(std::size_t k) const { return base_->row(sample_indices_[k]); }

  /// Keeps the samples for which `keep[k]` is true; weights follow, the
  /// normalizer is preserved so downstream aggregates stay self-normalized.
  StochasticTable filtered(const std::vector<bool>& keep) const;

 private:
  const Table* base_;
  std::vector<std::size_t> sample_indices_;
  std::vector<double> weights_;
  std::size_t population_size_;
  double weight_normalizer_;
};

/// Weighted aggregate over a stochastic table. `value_of` maps a sampled row
/// (by base-table index) to the per-row numeric value: an indicator for
/// COUNT, the operand column's value for SUM/AVG.
///
///   COUNT: population * (sum w_i f_i) / normalizer
///   SUM:   population * (sum w_i v_i) / normalizer
///   AVG:   (sum w_i v_i) / (sum w_i)           -- over the rows present
///
/// Products are formed before the final division so full-population samples
/// reproduce exact integer counts bit-for-bit.
double weighted_aggregate(const StochasticTable& st, AggOp op,
                          const std::function<double(std::size_t)>& value_of);

}  // namespace uqe
