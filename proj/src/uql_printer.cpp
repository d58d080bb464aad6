#include <cstdio>

#include "uqe/uql/ast.hpp"

namespace uqe::uql {

namespace {

std::string quote_nl(const std::string& text) {
  std::string out = "\"";
  for (char c : text) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string render_literal(const std::variant<std::int64_t, double, std::string>& lit) {
  if (auto* i = std::get_if<std::int64_t>(&lit)) return std::to_string(*i);
  if (auto* d = std::get_if<double>(&lit)) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", *d);
    std::string s = buf;
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
      s += ".0";
    return s;
  }
  return quote_nl(std::get<std::string>(lit));
}

std::string render_predicate(const Predicate& p) {
  if (p.is_semantic()) return quote_nl(p.semantic().text);
  const auto& c = p.comparison();
  return c.column + " " + compare_op_text(c.op) + " " + render_literal(c.literal);
}

std::string render_alias(const std::optional<std::string>& alias) {
  return alias ? " AS " + *alias : "";
}

std::string render_select_item(const SelectItem& item) {
  if (std::holds_alternative<SelectItem::Star>(item.node)) return "*";
  if (auto* col = std::get_if<SelectItem::ColumnRef>(&item.node))
    return col->name + render_alias(col->alias);
  if (auto* sem = std::get_if<SelectItem::SemanticLiteral>(&item.node))
    return quote_nl(sem->text) + render_alias(sem->alias);
  if (auto* lit = std::get_if<SelectItem::IntegerLiteral>(&item.node))
    return std::to_string(lit->value);
  const auto& agg = std::get<AggCall>(item.node);
  const char* op = agg.op == AggCall::Op::Count ? "COUNT"
                   : agg.op == AggCall::Op::Avg ? "AVG"
                                                : "SUM";
  return std::string(op) + "(" + (agg.column ? *agg.column : "*") + ")" +
         render_alias(agg.alias);
}

}  // namespace

std::string pretty_print(const QueryAst& ast) {
  std::string out = "SELECT ";
  for (std::size_t i = 0; i < ast.select.size(); ++i) {
    if (i) out += ", ";
    out += render_select_item(ast.select[i]);
  }
  out += " FROM " + ast.from;
  if (ast.where) {
    out += " WHERE " + render_predicate(ast.where->predicates[0]);
    for (std::size_t k = 0; k < ast.where->ops.size(); ++k) {
      out += ast.where->ops[k] == BoolOp::And ? " AND " : " OR ";
      out += render_predicate(ast.where->predicates[k + 1]);
    }
  }
  if (!ast.group_by.empty()) {
    out += " GROUP BY ";
    for (std::size_t i = 0; i < ast.group_by.size(); ++i) {
      if (i) out += ", ";
      const auto& key = ast.group_by[i];
      out += key.semantic ? quote_nl(key.text) : key.text;
      out += render_alias(key.alias);
    }
  }
  if (ast.order_by) {
    out += " ORDER BY ";
    for (std::size_t i = 0; i < ast.order_by->keys.size(); ++i) {
      if (i) out += ", ";
      const auto& key = ast.order_by->keys[i];
      switch (key.kind) {
        case OrderByKey::Kind::Column: out += key.text; break;
        case OrderByKey::Kind::NlLiteral: out += quote_nl(key.text); break;
        case OrderByKey::Kind::Integer: out += std::to_string(key.integer); break;
      }
    }
    if (ast.order_by->descending) out += " DESC";
  }
  if (ast.limit) out += " LIMIT " + std::to_string(*ast.limit);
  if (ast.to) out += " TO " + *ast.to;
  return out;
}

}  // namespace uqe::uql
