#pragma once

#include <string>
#include <vector>

#include "uqe/error.hpp"

namespace uqe::uql {

enum class TokenKind {
  Select,
  From,
  Where,
  As,
  Limit,
  Group,
  Order,
  By,
  To,
  And,
  Or,
  Count,
  Avg,
  Sum,
  Desc,
  Separator,        // ,
  All,              // *
  NlLiteral,        // "..." with backslash escapes
  VarName,          // dotted identifier
  CompareOperator,  // <> >= <= != > < =
  Integer,
  Float,
  LeftParenthesis,
  RightParenthesis,
  End,
};

const char* token_kind_name(TokenKind k);

struct Token {
  TokenKind kind = TokenKind::End;
  std::string lexeme;  // source text, quotes included for NL literals
  Span span;

  /// Unescaped body of an NL literal (backslash removed, escaped char kept).
  std::string nl_text() const;
};

/// Greedy scan of a UQL source string. Reserved words are matched
/// case-insensitively; two-character comparison operators win over their
/// one-character prefixes. Throws a positioned lexical error on unmatchable
/// input.
std::vector<Token> tokenize(std::string_view source);

}  // namespace uqe::uql
