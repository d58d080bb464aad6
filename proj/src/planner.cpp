#include "uqe/plan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace uqe {

const char* kernel_kind_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::Select: return "Select";
    case KernelKind::Where: return "Where";
    case KernelKind::GroupBy: return "GroupBy";
    case KernelKind::OrderBy: return "OrderBy";
    case KernelKind::Limit: return "Limit";
    case KernelKind::FusedWhereLimit: return "FusedWhereLimit";
    case KernelKind::FusedSelectGroupBy: return "FusedSelectGroupBy";
    case KernelKind::FusedGroupByWhere: return "FusedGroupByWhere";
  }
  return "?";
}

std::string Plan::describe() const {
  std::string out = "[";
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    if (i) out += ", ";
    out += kernel_kind_name(kernels[i].kind);
    if (kernels[i].kind == KernelKind::FusedWhereLimit && kernels[i].limit)
      out += "(" + std::to_string(*kernels[i].limit) + ")";
    char buf[32];
    std::snprintf(buf, sizeof(buf), " cost=%.1f", kernels[i].estimated_cost);
    out += buf;
  }
  out += "]";
  char buf[48];
  std::snprintf(buf, sizeof(buf), " total=%.1f", total_estimated_cost);
  out += buf;
  return out;
}

namespace {

bool has_semantic(const uql::DnfFormula& formula) {
  for (const auto& conj : formula.disjuncts)
    for (const auto& pred : conj)
      if (pred.is_semantic()) return true;
  return false;
}

}  // namespace

bool evaluate_structured_predicate(const uql::Predicate& pred, const Table& table,
                                   std::size_t row) {
  const auto& cmp = pred.comparison();
  auto j = table.schema().index_of(cmp.column);
  if (!j)
    throw Error("execute", "unknown-column", "unknown column '" + cmp.column + "'");
  const ColumnSpec& col = table.schema().at(*j);
  if (col.kind == ColumnKind::Unstructured)
    throw Error("execute", "type-mismatch",
                "column '" + cmp.column + "' is unstructured and cannot be compared");
  const Value& cell = table.cell(row, *j);
  if (cell.is_null()) return false;

  Value literal;
  if (auto* i = std::get_if<std::int64_t>(&cmp.literal)) {
    literal = Value::integer(*i);
  } else if (auto* d = std::get_if<double>(&cmp.literal)) {
    literal = Value::real(*d);
  } else {
    const std::string& text = std::get<std::string>(cmp.literal);
    if (col.type == ValueType::Datetime) {
      auto epoch = parse_iso8601(text);
      if (!epoch)
        throw Error("execute", "type-mismatch",
                    "cannot parse '" + text + "' as a datetime for column '" + cmp.column +
                        "'");
      literal = Value::datetime(*epoch);
    } else if (col.type == ValueType::EnumLabel) {
      literal = Value::enum_label(text);
    } else {
      literal = Value::text(text);
    }
  }

  int c = compare_values(cell, literal);
  switch (cmp.op) {
    case uql::CompareOp::Lt: return c < 0;
    case uql::CompareOp::Gt: return c > 0;
    case uql::CompareOp::Le: return c <= 0;
    case uql::CompareOp::Ge: return c >= 0;
    case uql::CompareOp::Eq: return c == 0;
    case uql::CompareOp::Ne: return c != 0;
  }
  return false;
}

SimplifiedDnf simplify_dnf(const uql::DnfFormula& formula, const Table& table,
                           std::size_t row) {
  SimplifiedDnf out;
  for (const auto& conj : formula.disjuncts) {
    std::vector<uql::Predicate> remaining;
    bool dropped = false;
    for (const auto& pred : conj) {
      if (pred.is_semantic()) {
        remaining.push_back(pred);
        continue;
      }
      if (!evaluate_structured_predicate(pred, table, row)) {
        dropped = true;
        break;
      }
      // true structured predicate: remove from the conjunction
    }
    if (dropped) continue;
    if (remaining.empty()) {
      out.outcome = SimplifyOutcome::True;
      out.residual.disjuncts.clear();
      return out;
    }
    out.residual.disjuncts.push_back(std::move(remaining));
  }
  out.outcome =
      out.residual.disjuncts.empty() ? SimplifyOutcome::False : SimplifyOutcome::Residual;
  return out;
}

TableStats compute_stats(const Table& table, const std::optional<uql::DnfFormula>& where) {
  TableStats stats;
  stats.total_rows = table.num_rows();
  if (!where) {
    stats.structured_true = table.num_rows();
    return stats;
  }
  for (std::size_t i = 0; i < table.num_rows(); ++i) {
    switch (simplify_dnf(*where, table, i).outcome) {
      case SimplifyOutcome::True: ++stats.structured_true; break;
      case SimplifyOutcome::False: ++stats.structured_false; break;
      case SimplifyOutcome::Residual: ++stats.residual_rows; break;
    }
  }
  return stats;
}

double estimate_cost(const Kernel& kernel, const TableStats& stats,
                     const BudgetConfig& budgets, uql::QueryClass query_class) {
  const double budget = query_class == uql::QueryClass::Aggregation
                            ? static_cast<double>(budgets.aggregation_budget)
                            : static_cast<double>(budgets.retrieval_budget);
  const double residual = static_cast<double>(stats.residual_rows);
  const double candidates = static_cast<double>(stats.candidates());
  switch (kernel.kind) {
    case KernelKind::Select: {
      if (kernel.extract_attributes.empty()) return 0.0;
      // extraction runs on every row that survives WHERE
      double survivors = static_cast<double>(stats.structured_true) +
                         budgets.selectivity_prior * std::min(budget, residual);
      if (kernel.limit) survivors = std::min(survivors, static_cast<double>(*kernel.limit));
      return survivors;
    }
    case KernelKind::Where:
      if (!kernel.where || !has_semantic(*kernel.where)) return 0.0;
      return std::min(budget, residual);
    case KernelKind::FusedWhereLimit: {
      if (!kernel.where || !has_semantic(*kernel.where)) return 0.0;
      double expected =
          static_cast<double>(kernel.limit.value_or(0)) / budgets.selectivity_prior;
      return std::min(expected, std::min(budget, residual));
    }
    case KernelKind::GroupBy:
    case KernelKind::FusedSelectGroupBy:
    case KernelKind::FusedGroupByWhere: {
      bool semantic_key = false;
      for (const auto& key : kernel.group_keys) semantic_key = semantic_key || key.semantic;
      if (!semantic_key) {
        // concrete keys group for free; a fused kernel still pays the
        // WHERE judgments
        if (kernel.kind == KernelKind::FusedGroupByWhere && kernel.where &&
            has_semantic(*kernel.where))
          return std::min(budget, residual);
        return 0.0;
      }
      return static_cast<double>(budgets.taxonomy_budget) + std::min(budget, candidates);
    }
    case KernelKind::OrderBy:
    case KernelKind::Limit:
      return 0.0;
  }
  return 0.0;
}

namespace {

void attach_costs(Plan& plan, const TableStats& stats, const BudgetConfig& budgets) {
  plan.total_estimated_cost = 0.0;
  for (auto& kernel : plan.kernels) {
    kernel.estimated_cost = estimate_cost(kernel, stats, budgets, plan.query_class);
    plan.total_estimated_cost += kernel.estimated_cost;
  }
}

// Select-kernel payload: semantic extractions (non-aggregation only).
Kernel make_select_kernel(const uql::QueryAst& ast) {
  Kernel select;
  select.kind = KernelKind::Select;
  for (const auto& item : ast.select)
    if (auto* sem = std::get_if<uql::SelectItem::SemanticLiteral>(&item.node))
      select.extract_attributes.push_back(sem->text);
  if (ast.limit) select.limit = ast.limit;
  return select;
}

bool select_references_semantic_key(const uql::QueryAst& ast) {
  for (const auto& key : ast.group_by) {
    if (!key.semantic) continue;
    for (const auto& item : ast.select) {
      if (auto* col = std::get_if<uql::SelectItem::ColumnRef>(&item.node)) {
        if (key.alias && col->name == *key.alias) return true;
      }
      if (auto* sem = std::get_if<uql::SelectItem::SemanticLiteral>(&item.node)) {
        if (sem->text == key.text) return true;
        if (key.alias && sem->alias && *sem->alias == *key.alias) return true;
      }
      if (std::holds_alternative<uql::SelectItem::Star>(item.node)) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<Plan> enumerate_plans(const uql::QueryAst& ast, uql::QueryClass query_class,
                                  const TableStats& stats, const BudgetConfig& budgets) {
  std::vector<Plan> plans;
  const bool semantic_where = ast.where_dnf && has_semantic(*ast.where_dnf);

  if (query_class == uql::QueryClass::NonAggregation) {
    // [Where?, Select, OrderBy?, Limit?]
    Plan base;
    base.query_class = query_class;
    if (ast.where_dnf) {
      Kernel where;
      where.kind = KernelKind::Where;
      where.where = ast.where_dnf;
      base.kernels.push_back(std::move(where));
    }
    base.kernels.push_back(make_select_kernel(ast));
    if (ast.order_by) {
      Kernel order;
      order.kind = KernelKind::OrderBy;
      order.order_by = ast.order_by;
      base.kernels.push_back(std::move(order));
    }
    if (ast.limit) {
      Kernel limit;
      limit.kind = KernelKind::Limit;
      limit.limit = ast.limit;
      base.kernels.push_back(std::move(limit));
    }
    plans.push_back(std::move(base));

    // WHERE + LIMIT fusion: early termination, invalid under ORDER BY
    if (ast.where_dnf && ast.limit && !ast.order_by) {
      Plan fused;
      fused.query_class = query_class;
      Kernel where_limit;
      where_limit.kind = KernelKind::FusedWhereLimit;
      where_limit.where = ast.where_dnf;
      where_limit.limit = ast.limit;
      fused.kernels.push_back(std::move(where_limit));
      fused.kernels.push_back(make_select_kernel(ast));
      plans.push_back(std::move(fused));
    }
  } else {
    const bool has_group_by = !ast.group_by.empty();
    const bool fuse_select = has_group_by && select_references_semantic_key(ast);

    auto group_kernel = [&](bool include_where) {
      Kernel gb;
      gb.kind = include_where ? KernelKind::FusedGroupByWhere
                : fuse_select ? KernelKind::FusedSelectGroupBy
                              : KernelKind::GroupBy;
      gb.group_keys = ast.group_by;
      if (include_where) gb.where = ast.where_dnf;
      return gb;
    };

    // unfused: [Where?, GroupBy-variant?]
    Plan base;
    base.query_class = query_class;
    if (ast.where_dnf) {
      Kernel where;
      where.kind = KernelKind::Where;
      where.where = ast.where_dnf;
      base.kernels.push_back(std::move(where));
    }
    if (has_group_by) base.kernels.push_back(group_kernel(false));
    if (ast.order_by) {
      Kernel order;
      order.kind = KernelKind::OrderBy;
      order.order_by = ast.order_by;
      base.kernels.push_back(std::move(order));
    }
    if (ast.limit) {
      Kernel limit;
      limit.kind = KernelKind::Limit;
      limit.limit = ast.limit;
      base.kernels.push_back(std::move(limit));
    }
    plans.push_back(std::move(base));

    // GROUP BY + WHERE fusion shares one sampling pass
    if (has_group_by && semantic_where) {
      Plan fused;
      fused.query_class = query_class;
      fused.kernels.push_back(group_kernel(true));
      if (ast.order_by) {
        Kernel order;
        order.kind = KernelKind::OrderBy;
        order.order_by = ast.order_by;
        fused.kernels.push_back(std::move(order));
      }
      if (ast.limit) {
        Kernel limit;
        limit.kind = KernelKind::Limit;
        limit.limit = ast.limit;
        fused.kernels.push_back(std::move(limit));
      }
      plans.push_back(std::move(fused));
    }
  }

  for (auto& plan : plans) attach_costs(plan, stats, budgets);
  return plans;
}

Plan select_plan(const std::vector<Plan>& plans) {
  if (plans.empty()) throw Error("plan", "no-plans", "no candidate plans");
  auto kind_sequence = [](const Plan& p) {
    std::string s;
    for (const auto& k : p.kernels) {
      s += kernel_kind_name(k.kind);
      s += '|';
    }
    return s;
  };
  const Plan* best = &plans[0];
  for (const auto& plan : plans) {
    if (plan.total_estimated_cost < best->total_estimated_cost) {
      best = &plan;
    } else if (plan.total_estimated_cost == best->total_estimated_cost) {
      if (plan.kernels.size() < best->kernels.size() ||
          (plan.kernels.size() == best->kernels.size() &&
           kind_sequence(plan) < kind_sequence(*best)))
        best = &plan;
    }
  }
  return *best;
}

const std::string& SemanticBinding::source_for(const std::string& text) const {
  auto it = source_by_text.find(text);
  if (it == source_by_text.end())
    throw Error("bind", "unbound-fragment", "no source column bound for \"" + text + "\"");
  return it->second;
}

SemanticBinding bind_plan(const Plan& plan, const uql::QueryAst& ast, const Schema& schema,
                     const std::map<std::string, std::string>& explicit_bindings) {
  std::vector<std::string> fragments;
  if (ast.where_dnf)
    for (const auto& conj : ast.where_dnf->disjuncts)
      for (const auto& pred : conj)
        if (pred.is_semantic()) fragments.push_back(pred.semantic().text);
  for (const auto& key : ast.group_by)
    if (key.semantic) fragments.push_back(key.text);
  for (const auto& item : ast.select)
    if (auto* sem = std::get_if<uql::SelectItem::SemanticLiteral>(&item.node))
      fragments.push_back(sem->text);
  (void)plan;

  auto unstructured = schema.unstructured_columns();
  SemanticBinding binding;
  for (const auto& text : fragments) {
    auto it = explicit_bindings.find(text);
    if (it != explicit_bindings.end()) {
      if (!schema.index_of(it->second))
        throw Error("bind", "unknown-column",
                    "bound source column '" + it->second + "' does not exist");
      binding.source_by_text[text] = it->second;
      continue;
    }
    if (unstructured.size() == 1) {
      binding.source_by_text[text] = schema.at(unstructured[0]).name;
      continue;
    }
    if (unstructured.empty())
      throw Error("bind", "no-unstructured-column",
                  "semantic fragment \"" + text + "\" needs an unstructured column");
    std::string candidates;
    for (std::size_t j : unstructured) {
      if (!candidates.empty()) candidates += ", ";
      candidates += "'" + schema.at(j).name + "'";
    }
    throw Error("bind", "ambiguous-binding",
                "semantic fragment \"" + text + "\" is ambiguous; candidate columns: " +
                    candidates);
  }
  return binding;
}

std::vector<std::size_t> taxonomy_probe_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ 0x0a02bdbf7bb3c0a7ULL);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  return order;
}

}  // namespace uqe
