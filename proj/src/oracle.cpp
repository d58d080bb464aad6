#include "uqe/oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "uqe/util/hash.hpp"

namespace uqe {

void Taxonomy::check() const {
  if (categories.empty())
    throw Error("oracle", "invalid-taxonomy", "taxonomy has no categories");
  std::unordered_set<std::string> seen;
  for (const auto& c : categories) {
    if (c.label.empty())
      throw Error("oracle", "invalid-taxonomy", "empty taxonomy label");
    if (!seen.insert(c.label).second)
      throw Error("oracle", "invalid-taxonomy", "duplicate taxonomy label '" + c.label + "'");
  }
}

const Value& RowRef::cell(std::string_view column) const {
  auto j = table->schema().index_of(column);
  if (!j)
    throw Error("oracle", "unknown-column", "unknown column '" + std::string(column) + "'");
  return table->cell(index, *j);
}

std::string RowRef::text(std::string_view column) const { return cell(column).render(); }

MeterSnapshot MeterSnapshot::operator-(const MeterSnapshot& o) const {
  MeterSnapshot d;
  d.judge_calls = judge_calls - o.judge_calls;
  d.extract_calls = extract_calls - o.extract_calls;
  d.taxonomy_calls = taxonomy_calls - o.taxonomy_calls;
  d.classify_calls = classify_calls - o.classify_calls;
  d.combined_calls = combined_calls - o.combined_calls;
  d.total_calls = total_calls - o.total_calls;
  d.rows_fed = rows_fed - o.rows_fed;
  d.prompt_chars = prompt_chars - o.prompt_chars;
  return d;
}

MeterSnapshot OracleMeter::snapshot() const {
  MeterSnapshot s;
  s.judge_calls = judge_.load(std::memory_order_relaxed);
  s.extract_calls = extract_.load(std::memory_order_relaxed);
  s.taxonomy_calls = taxonomy_.load(std::memory_order_relaxed);
  s.classify_calls = classify_.load(std::memory_order_relaxed);
  s.combined_calls = combined_.load(std::memory_order_relaxed);
  s.total_calls =
      s.judge_calls + s.extract_calls + s.taxonomy_calls + s.classify_calls + s.combined_calls;
  s.rows_fed = rows_fed_.load(std::memory_order_relaxed);
  s.prompt_chars = prompt_chars_.load(std::memory_order_relaxed);
  return s;
}

namespace {

double unit_fraction(std::uint64_t h) {
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);  // 2^53
}

// Deterministic error pattern: row i is flipped iff a phase-shifted stride
// crosses an integer boundary. Over any sweep of rows 0..N-1 the number of
// flips is floor(eps*N + u) for a fixed phase u in [0,1), i.e. within one of
// eps*N, and the pattern is a pure function of (seed, condition, row index).
bool stride_flip(double eps, double phase, std::size_t i) {
  return std::floor((static_cast<double>(i) + 1.0) * eps + phase) -
             std::floor(static_cast<double>(i) * eps + phase) >=
         1.0;
}

}  // namespace

bool MockOracle::truth(const RowRef& row, const Condition& cond) const {
  if (cond.text.empty())
    throw Error("oracle", "invalid-condition", "empty condition text");
  auto it = spec_.judge_bindings.find(cond.text);
  const std::string& column = it != spec_.judge_bindings.end() ? it->second.first
                                                               : spec_.label_column;
  if (column.empty())
    throw Error("oracle", "mock-unbound",
                "mock oracle has no judge binding for \"" + cond.text +
                    "\" and no label column configured");
  const std::string& target = it != spec_.judge_bindings.end() ? it->second.second : cond.text;
  return row.text(column) == target;
}

std::string MockOracle::attribute_value(const RowRef& row, const std::string& attribute) const {
  auto it = spec_.extract_bindings.find(attribute);
  const std::string& column =
      it != spec_.extract_bindings.end() ? it->second : spec_.label_column;
  if (column.empty())
    throw Error("oracle", "mock-unbound",
                "mock oracle has no extract binding for \"" + attribute +
                    "\" and no label column configured");
  return row.text(column);
}

bool MockOracle::judge(const RowRef& row, const Condition& cond) {
  std::uint64_t chars = 0;
  if (!cond.source_columns.empty())
    chars = row.text(cond.source_columns.front()).size();
  else if (!spec_.label_column.empty())
    chars = row.text(spec_.label_column).size();
  meter_.record_judge(chars);
  bool v = truth(row, cond);
  if (spec_.error_rate > 0.0) {
    double phase = unit_fraction(fnv1a(cond.text, fnv1a_mix(spec_.seed)));
    if (stride_flip(spec_.error_rate, phase, row.index)) v = !v;
  }
  return v;
}

std::vector<std::string> MockOracle::extract(const RowRef& row,
                                             const std::vector<std::string>& attributes,
                                             const std::string& source_column) {
  meter_.record_extract(row.text(source_column).size());
  std::vector<std::string> out;
  out.reserve(attributes.size());
  for (const auto& attr : attributes) out.push_back(attribute_value(row, attr));
  return out;
}

Taxonomy MockOracle::build_taxonomy(const std::vector<RowRef>& sample,
                                    const std::string& attribute,
                                    const std::string& source_column, std::size_t max_groups) {
  if (sample.empty())
    throw Error("oracle", "empty-sample", "taxonomy construction needs at least one row");
  std::uint64_t chars = 0;
  for (const auto& r : sample) chars += r.text(source_column).size();
  meter_.record_taxonomy(sample.size(), chars);

  Taxonomy tax;
  tax.attribute = attribute;
  std::unordered_set<std::string> seen;
  for (const auto& r : sample) {
    std::string label = attribute_value(r, attribute);
    if (seen.insert(label).second && tax.categories.size() < max_groups)
      tax.categories.push_back({tax.categories.size(), label, ""});
  }
  tax.check();
  return tax;
}

ClassifyResult MockOracle::classify(const RowRef& row, const Taxonomy& taxonomy,
                                    const std::string& source_column) {
  meter_.record_classify(row.text(source_column).size());
  std::string label = attribute_value(row, taxonomy.attribute);
  for (const auto& c : taxonomy.categories)
    if (c.label == label) return ClassifyResult{{c.index}, false};
  // label absent from the taxonomy: fall back to the first category and flag
  return ClassifyResult{{0}, true};
}

std::pair<bool, ClassifyResult> MockOracle::judge_and_classify(
    const RowRef& row, const Condition& cond, const Taxonomy& taxonomy,
    const std::string& source_column) {
  meter_.record_combined(row.text(source_column).size());
  bool v = truth(row, cond);
  if (spec_.error_rate > 0.0) {
    double phase = unit_fraction(fnv1a(cond.text, fnv1a_mix(spec_.seed)));
    if (stride_flip(spec_.error_rate, phase, row.index)) v = !v;
  }
  std::string label = attribute_value(row, taxonomy.attribute);
  for (const auto& c : taxonomy.categories)
    if (c.label == label) return {v, ClassifyResult{{c.index}, false}};
  return {v, ClassifyResult{{0}, true}};
}

}  // namespace uqe
