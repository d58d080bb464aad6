#include <charconv>
#include <unordered_set>

#include "uqe/uql/ast.hpp"

namespace uqe::uql {

const char* compare_op_text(CompareOp op) {
  switch (op) {
    case CompareOp::Lt: return "<";
    case CompareOp::Gt: return ">";
    case CompareOp::Le: return "<=";
    case CompareOp::Ge: return ">=";
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
  }
  return "?";
}

CompareOp compare_op_from_text(std::string_view text) {
  if (text == "<") return CompareOp::Lt;
  if (text == ">") return CompareOp::Gt;
  if (text == "<=") return CompareOp::Le;
  if (text == ">=") return CompareOp::Ge;
  if (text == "=") return CompareOp::Eq;
  // <> normalizes to !=
  return CompareOp::Ne;
}

QueryClass classify(const QueryAst& ast) {
  if (!ast.group_by.empty()) return QueryClass::Aggregation;
  for (const auto& item : ast.select)
    if (std::holds_alternative<AggCall>(item.node)) return QueryClass::Aggregation;
  return QueryClass::NonAggregation;
}

namespace {

class Parser {
 public:
  explicit Parser(const std::vector<Token>& tokens) : tokens_(tokens) {}

  QueryAst parse_query() {
    QueryAst ast;
    expect(TokenKind::Select);
    ast.select = parse_select_expression();
    expect(TokenKind::From);
    ast.from = expect_name("table name");
    parse_optional_clauses(ast);
    expect(TokenKind::End);
    validate(ast);
    return ast;
  }

 private:
  const std::vector<Token>& tokens_;
  std::size_t pos_ = 0;

  const Token& peek() const { return tokens_[pos_]; }
  const Token& advance() { return tokens_[pos_++]; }
  bool at(TokenKind k) const { return peek().kind == k; }

  bool accept(TokenKind k) {
    if (!at(k)) return false;
    ++pos_;
    return true;
  }

  [[noreturn]] void fail(const std::string& expected) const {
    const Token& t = peek();
    throw Error("parse", "syntax",
                "expected " + expected + ", got " + token_kind_name(t.kind) +
                    (t.lexeme.empty() ? "" : " '" + t.lexeme + "'"),
                t.span);
  }

  const Token& expect(TokenKind k) {
    if (!at(k)) fail(token_kind_name(k));
    return advance();
  }

  bool is_agg_op() const {
    return at(TokenKind::Count) || at(TokenKind::Avg) || at(TokenKind::Sum);
  }

  // Identifier position. The aggregation keywords double as plain names here
  // so that aliases like `AS count` parse.
  std::string expect_name(const std::string& what) {
    if (at(TokenKind::VarName) || is_agg_op()) return advance().lexeme;
    fail(what.empty() ? "VAR_NAME" : what);
  }

  std::optional<std::string> parse_alias() {
    if (!accept(TokenKind::As)) return std::nullopt;
    return expect_name("alias");
  }

  std::vector<SelectItem> parse_select_expression() {
    std::vector<SelectItem> items;
    items.push_back(parse_select_literal());
    while (accept(TokenKind::Separator)) items.push_back(parse_select_literal());
    return items;
  }

  SelectItem parse_select_literal() {
    if (accept(TokenKind::All)) return SelectItem{SelectItem::Star{}};
    if (is_agg_op()) return SelectItem{parse_aggregation()};
    if (at(TokenKind::NlLiteral)) {
      auto text = advance().nl_text();
      return SelectItem{SelectItem::SemanticLiteral{std::move(text), parse_alias()}};
    }
    if (at(TokenKind::VarName)) {
      auto name = advance().lexeme;
      return SelectItem{SelectItem::ColumnRef{std::move(name), parse_alias()}};
    }
    if (at(TokenKind::Integer)) {
      std::int64_t v = parse_int(advance());
      return SelectItem{SelectItem::IntegerLiteral{v}};
    }
    fail("select literal (*, column, \"...\", aggregation or INTEGER)");
  }

  AggCall parse_aggregation() {
    AggCall agg;
    const Token& op = advance();
    agg.op = op.kind == TokenKind::Count  ? AggCall::Op::Count
             : op.kind == TokenKind::Avg ? AggCall::Op::Avg
                                         : AggCall::Op::Sum;
    expect(TokenKind::LeftParenthesis);
    if (!accept(TokenKind::All)) agg.column = expect_name("column name or *");
    expect(TokenKind::RightParenthesis);
    agg.alias = parse_alias();
    return agg;
  }

  void parse_optional_clauses(QueryAst& ast) {
    while (true) {
      const Token& t = peek();
      switch (t.kind) {
        case TokenKind::Where:
          reject_duplicate(ast.where.has_value(), "WHERE", t.span);
          advance();
          ast.where = parse_where_expression();
          ast.where_dnf = to_dnf(*ast.where);
          break;
        case TokenKind::Group:
          reject_duplicate(!ast.group_by.empty(), "GROUP BY", t.span);
          advance();
          expect(TokenKind::By);
          ast.group_by = parse_group_by_expression();
          break;
        case TokenKind::Order:
          reject_duplicate(ast.order_by.has_value(), "ORDER BY", t.span);
          advance();
          expect(TokenKind::By);
          ast.order_by = parse_order_by();
          break;
        case TokenKind::Limit: {
          reject_duplicate(ast.limit.has_value(), "LIMIT", t.span);
          advance();
          ast.limit = parse_int(expect(TokenKind::Integer));
          break;
        }
        case TokenKind::To:
          reject_duplicate(ast.to.has_value(), "TO", t.span);
          advance();
          ast.to = expect_name("result name");
          break;
        default:
          return;
      }
    }
  }

  void reject_duplicate(bool present, const char* clause, Span span) const {
    if (present)
      throw Error("parse", "duplicate-clause",
                  std::string("duplicate ") + clause + " clause", span);
  }

  WhereChain parse_where_expression() {
    WhereChain chain;
    chain.predicates.push_back(parse_predicate());
    while (at(TokenKind::And) || at(TokenKind::Or)) {
      chain.ops.push_back(advance().kind == TokenKind::And ? BoolOp::And : BoolOp::Or);
      chain.predicates.push_back(parse_predicate());
    }
    return chain;
  }

  Predicate parse_predicate() {
    const Token& t = peek();
    if (at(TokenKind::NlLiteral)) {
      advance();
      return Predicate{Predicate::Semantic{t.nl_text()}, t.span};
    }
    if (at(TokenKind::VarName)) {
      std::string column = advance().lexeme;
      const Token& op_tok = expect(TokenKind::CompareOperator);
      CompareOp op = compare_op_from_text(op_tok.lexeme);
      Predicate::Comparison cmp{std::move(column), op, std::int64_t{0}};
      if (at(TokenKind::NlLiteral))
        cmp.literal = advance().nl_text();
      else if (at(TokenKind::Integer))
        cmp.literal = parse_int(advance());
      else if (at(TokenKind::Float))
        cmp.literal = parse_float(advance());
      else
        fail("comparison literal (NL_LITERAL, INTEGER or FLOAT)");
      Span span{t.span.begin, tokens_[pos_ - 1].span.end};
      return Predicate{std::move(cmp), span};
    }
    fail("predicate (NL_LITERAL or column comparison)");
  }

  std::vector<GroupByKey> parse_group_by_expression() {
    std::vector<GroupByKey> keys;
    keys.push_back(parse_group_by_literal());
    while (accept(TokenKind::Separator)) keys.push_back(parse_group_by_literal());
    return keys;
  }

  GroupByKey parse_group_by_literal() {
    if (at(TokenKind::NlLiteral)) {
      auto text = advance().nl_text();
      return GroupByKey{true, std::move(text), parse_alias()};
    }
    if (at(TokenKind::VarName)) {
      auto name = advance().lexeme;
      return GroupByKey{false, std::move(name), parse_alias()};
    }
    fail("group-by literal (column or \"...\")");
  }

  OrderByClause parse_order_by() {
    OrderByClause clause;
    clause.keys.push_back(parse_order_by_literal());
    while (accept(TokenKind::Separator)) clause.keys.push_back(parse_order_by_literal());
    clause.descending = accept(TokenKind::Desc);
    return clause;
  }

  OrderByKey parse_order_by_literal() {
    if (at(TokenKind::VarName)) return OrderByKey{OrderByKey::Kind::Column, advance().lexeme};
    if (at(TokenKind::NlLiteral))
      return OrderByKey{OrderByKey::Kind::NlLiteral, advance().nl_text()};
    if (at(TokenKind::Integer)) {
      const Token& t = advance();
      return OrderByKey{OrderByKey::Kind::Integer, t.lexeme, parse_int(t)};
    }
    fail("order-by literal (column, \"...\" or INTEGER)");
  }

  std::int64_t parse_int(const Token& t) const {
    std::int64_t v = 0;
    auto r = std::from_chars(t.lexeme.data(), t.lexeme.data() + t.lexeme.size(), v);
    if (r.ec != std::errc())
      throw Error("parse", "syntax", "integer out of range '" + t.lexeme + "'", t.span);
    return v;
  }

  double parse_float(const Token& t) const { return std::stod(t.lexeme); }

  // Structural checks that do not need a schema.
  void validate(const QueryAst& ast) const {
    std::unordered_set<std::string> aliases;
    auto check_alias = [&](const std::optional<std::string>& a) {
      if (a && !aliases.insert(*a).second)
        throw Error("parse", "duplicate-alias", "alias '" + *a + "' introduced twice");
    };
    for (const auto& item : ast.select) {
      if (auto* col = std::get_if<SelectItem::ColumnRef>(&item.node)) check_alias(col->alias);
      if (auto* sem = std::get_if<SelectItem::SemanticLiteral>(&item.node))
        check_alias(sem->alias);
      if (auto* agg = std::get_if<AggCall>(&item.node)) check_alias(agg->alias);
    }
    for (const auto& key : ast.group_by) check_alias(key.alias);
    if (ast.limit && *ast.limit <= 0)
      throw Error("parse", "invalid-limit",
                  "LIMIT must be positive, got " + std::to_string(*ast.limit));
  }
};

}  // namespace

QueryAst parse(const std::vector<Token>& tokens) { return Parser(tokens).parse_query(); }

QueryAst parse_query(std::string_view source) { return parse(tokenize(source)); }

namespace {

constexpr std::size_t kMaxDisjuncts = 64;

void check_blowup(std::size_t n) {
  if (n > kMaxDisjuncts)
    throw Error("parse", "query-too-complex",
                "WHERE normalization exceeds " + std::to_string(kMaxDisjuncts) +
                    " disjuncts");
}

}  // namespace

DnfFormula to_dnf(const BoolExpr& tree) {
  if (tree.is_leaf()) return DnfFormula{{{*tree.pred}}};
  DnfFormula left = to_dnf(*tree.lhs);
  DnfFormula right = to_dnf(*tree.rhs);
  DnfFormula out;
  if (tree.op == BoolOp::Or) {
    out.disjuncts = std::move(left.disjuncts);
    for (auto& conj : right.disjuncts) out.disjuncts.push_back(std::move(conj));
  } else {
    // (A1 v ... v Am) ^ (B1 v ... v Bn) -> OR over all Ai ^ Bj
    check_blowup(left.disjuncts.size() * right.disjuncts.size());
    for (const auto& a : left.disjuncts)
      for (const auto& b : right.disjuncts) {
        auto conj = a;
        conj.insert(conj.end(), b.begin(), b.end());
        out.disjuncts.push_back(std::move(conj));
      }
  }
  check_blowup(out.disjuncts.size());
  return out;
}

std::unique_ptr<BoolExpr> chain_to_tree(const WhereChain& chain) {
  auto tree = std::make_unique<BoolExpr>(chain.predicates[0]);
  for (std::size_t k = 0; k < chain.ops.size(); ++k)
    tree = std::make_unique<BoolExpr>(chain.ops[k], std::move(tree),
                                      std::make_unique<BoolExpr>(chain.predicates[k + 1]));
  return tree;
}

DnfFormula to_dnf(const WhereChain& chain) { return to_dnf(*chain_to_tree(chain)); }

}  // namespace uqe::uql
