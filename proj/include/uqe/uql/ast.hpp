#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "uqe/uql/token.hpp"

namespace uqe::uql {

enum class CompareOp { Lt, Gt, Le, Ge, Eq, Ne };

const char* compare_op_text(CompareOp op);
CompareOp compare_op_from_text(std::string_view text);  // normalizes <> to !=

/// A WHERE predicate: either a natural-language condition over unstructured
/// content, or a comparison of a concrete column against a literal.
struct Predicate {
  struct Semantic {
    std::string text;
    bool operator==(const Semantic&) const = default;
  };
  struct Comparison {
    std::string column;
    CompareOp op;
    std::variant<std::int64_t, double, std::string> literal;
    bool operator==(const Comparison&) const = default;
  };
  std::variant<Semantic, Comparison> node;
  Span span;

  bool is_semantic() const { return std::holds_alternative<Semantic>(node); }
  const Semantic& semantic() const { return std::get<Semantic>(node); }
  const Comparison& comparison() const { return std::get<Comparison>(node); }

  bool operator==(const Predicate& o) const { return node == o.node; }
};

enum class BoolOp { And, Or };

/// Left-associative AND/OR chain exactly as written; the grammar has no
/// parentheses and no precedence, so `p1 op1 p2 op2 p3` evaluates as
/// `((p1 op1 p2) op2 p3)`.
struct WhereChain {
  std::vector<Predicate> predicates;        // size n
  std::vector<BoolOp> ops;                  // size n-1

  bool operator==(const WhereChain&) const = default;
};

/// OR of ANDs. Disjuncts and the predicates within each conjunction keep
/// source order.
struct DnfFormula {
  std::vector<std::vector<Predicate>> disjuncts;

  bool operator==(const DnfFormula&) const = default;
};

/// General AND/OR tree over predicates. The parser only ever produces
/// left-associative chains, but DNF conversion is defined on arbitrary trees.
struct BoolExpr {
  BoolExpr(Predicate p) : pred(std::move(p)) {}
  BoolExpr(BoolOp o, std::unique_ptr<BoolExpr> l, std::unique_ptr<BoolExpr> r)
      : op(o), lhs(std::move(l)), rhs(std::move(r)) {}

  bool is_leaf() const { return pred.has_value(); }

  std::optional<Predicate> pred;
  BoolOp op = BoolOp::And;
  std::unique_ptr<BoolExpr> lhs, rhs;
};

struct AggCall {
  enum class Op { Count, Avg, Sum } op;
  std::optional<std::string> column;  // empty for agg(*)
  std::optional<std::string> alias;

  bool operator==(const AggCall&) const = default;
};

struct SelectItem {
  struct Star {
    bool operator==(const Star&) const = default;
  };
  struct ColumnRef {
    std::string name;
    std::optional<std::string> alias;
    bool operator==(const ColumnRef&) const = default;
  };
  struct SemanticLiteral {
    std::string text;
    std::optional<std::string> alias;
    bool operator==(const SemanticLiteral&) const = default;
  };
  struct IntegerLiteral {
    std::int64_t value;  // grammatically valid; rejected by the executor
    bool operator==(const IntegerLiteral&) const = default;
  };
  std::variant<Star, ColumnRef, SemanticLiteral, AggCall, IntegerLiteral> node;

  bool operator==(const SelectItem&) const = default;
};

struct GroupByKey {
  bool semantic = false;
  std::string text;  // column name or NL attribute description
  std::optional<std::string> alias;

  bool operator==(const GroupByKey&) const = default;
};

struct OrderByKey {
  enum class Kind { Column, NlLiteral, Integer } kind = Kind::Column;
  std::string text;
  std::int64_t integer = 0;

  bool operator==(const OrderByKey&) const = default;
};

struct OrderByClause {
  std::vector<OrderByKey> keys;
  bool descending = false;

  bool operator==(const OrderByClause&) const = default;
};

struct QueryAst {
  std::vector<SelectItem> select;
  std::string from;
  std::optional<WhereChain> where;       // as written, for printing
  std::optional<DnfFormula> where_dnf;   // normalized at parse time
  std::vector<GroupByKey> group_by;
  std::optional<OrderByClause> order_by;
  std::optional<std::int64_t> limit;
  std::optional<std::string> to;

  bool operator==(const QueryAst&) const = default;
};

enum class QueryClass { Aggregation, NonAggregation };

/// Aggregation iff the query has an aggregation select item or a GROUP BY.
QueryClass classify(const QueryAst& ast);

/// Parses a token stream into a validated AST. Optional clauses are accepted
/// in any order but at most once each; duplicates are rejected.
QueryAst parse(const std::vector<Token>& tokens);

/// Convenience: tokenize + parse.
QueryAst parse_query(std::string_view source);

/// DNF by distribution. Preserves predicate source order inside each
/// conjunction; rejects formulas that expand past 64 disjuncts.
DnfFormula to_dnf(const BoolExpr& tree);
DnfFormula to_dnf(const WhereChain& chain);

/// Left fold of the chain into a tree.
std::unique_ptr<BoolExpr> chain_to_tree(const WhereChain& chain);

/// Canonical rendering; the printed text reparses to a structurally
/// identical AST.
std::string pretty_print(const QueryAst& ast);

}  // namespace uqe::uql
