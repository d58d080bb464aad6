#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "uqe/table.hpp"

namespace uqe {

/// Natural-language predicate plus the unstructured columns it reads.
struct Condition {
  std::string text;
  std::vector<std::string> source_columns;
};

struct TaxonomyCategory {
  std::size_t index = 0;
  std::string label;
  std::string description;
};

/// Category set extracted from a representative row sample for a semantic
/// GROUP BY. Labels are nonempty and distinct.
struct Taxonomy {
  std::string attribute;
  std::vector<TaxonomyCategory> categories;

  void check() const;
};

/// Row handle passed to oracle backends: base table + ingestion index.
struct RowRef {
  const Table* table = nullptr;
  std::size_t index = 0;

  const Value& cell(std::string_view column) const;
  std::string text(std::string_view column) const;
};

struct ClassifyResult {
  std::vector<std::size_t> categories;  // nonempty, sorted, in range
  bool unmapped = false;                // label absent from the taxonomy
};

struct MeterSnapshot {
  std::uint64_t judge_calls = 0;
  std::uint64_t extract_calls = 0;
  std::uint64_t taxonomy_calls = 0;
  std::uint64_t classify_calls = 0;
  std::uint64_t combined_calls = 0;
  std::uint64_t total_calls = 0;
  std::uint64_t rows_fed = 0;  // row-units of content shipped to the oracle
  std::uint64_t prompt_chars = 0;

  MeterSnapshot operator-(const MeterSnapshot& o) const;
};

/// Thread-safe call accounting; every oracle call is metered.
class OracleMeter {
 public:
  void record_judge(std::uint64_t chars) { bump(judge_, 1, chars); }
  void record_extract(std::uint64_t chars) { bump(extract_, 1, chars); }
  void record_taxonomy(std::uint64_t rows, std::uint64_t chars) { bump(taxonomy_, rows, chars); }
  void record_classify(std::uint64_t chars) { bump(classify_, 1, chars); }
  void record_combined(std::uint64_t chars) { bump(combined_, 1, chars); }

  MeterSnapshot snapshot() const;

 private:
  void bump(std::atomic<std::uint64_t>& op, std::uint64_t rows, std::uint64_t chars) {
    op.fetch_add(1, std::memory_order_relaxed);
    rows_fed_.fetch_add(rows, std::memory_order_relaxed);
    prompt_chars_.fetch_add(chars, std::memory_order_relaxed);
  }

  std::atomic<std::uint64_t> judge_{0}, extract_{0}, taxonomy_{0}, classify_{0}, combined_{0};
  std::atomic<std::uint64_t> rows_fed_{0}, prompt_chars_{0};
};

/// Pluggable semantic oracle. Backends must be safe for concurrent calls;
/// the engine fans out independent row judgments.
class OracleBackend {
 public:
  virtual ~OracleBackend() = default;

  /// Binary judgment f(row, cond) -> {0, 1}.
  virtual bool judge(const RowRef& row, const Condition& cond) = 0;

  /// Extracts one value per attribute from `source_column`, all attributes
  /// batched into a single call.
  virtual std::vector<std::string> extract(const RowRef& row,
                                           const std::vector<std::string>& attributes,
                                           const std::string& source_column) = 0;

  virtual Taxonomy build_taxonomy(const std::vector<RowRef>& sample,
                                  const std::string& attribute,
                                  const std::string& source_column,
                                  std::size_t max_groups) = 0;

  virtual ClassifyResult classify(const RowRef& row, const Taxonomy& taxonomy,
                                  const std::string& source_column) = 0;

  /// Fused WHERE judgment + classification in one call.
  virtual std::pair<bool, ClassifyResult> judge_and_classify(const RowRef& row,
                                                             const Condition& cond,
                                                             const Taxonomy& taxonomy,
                                                             const std::string& source_column) = 0;

  OracleMeter& meter() { return meter_; }
  const OracleMeter& meter() const { return meter_; }

 protected:
  OracleMeter meter_;
};

/// Ground-truth mock: answers from a hidden structured column, optionally
/// corrupted by a deterministic error pattern.
struct MockSpec {
  std::string label_column;
  double error_rate = 0.0;
  std::uint64_t seed = 0;
  /// condition text -> (hidden column, value it must equal); conditions
  /// without a binding compare the label column against the text itself.
  std::map<std::string, std::pair<std::string, std::string>> judge_bindings;
  /// attribute text -> hidden column; default is the label column.
  std::map<std::string, std::string> extract_bindings;
};

class MockOracle : public OracleBackend {
 public:
  explicit MockOracle(MockSpec spec) : spec_(std::move(spec)) {}

  bool judge(const RowRef& row, const Condition& cond) override;
  std::vector<std::string> extract(const RowRef& row,
                                   const std::vector<std::string>& attributes,
                                   const std::string& source_column) override;
  Taxonomy build_taxonomy(const std::vector<RowRef>& sample, const std::string& attribute,
                          const std::string& source_column, std::size_t max_groups) override;
  ClassifyResult classify(const RowRef& row, const Taxonomy& taxonomy,
                          const std::string& source_column) override;
  std::pair<bool, ClassifyResult> judge_and_classify(const RowRef& row, const Condition& cond,
                                                     const Taxonomy& taxonomy,
                                                     const std::string& source_column) override;

  const MockSpec& spec() const { return spec_; }

 private:
  bool truth(const RowRef& row, const Condition& cond) const;
  std::string attribute_value(const RowRef& row, const std::string& attribute) const;

  MockSpec spec_;
};

}  // namespace uqe
