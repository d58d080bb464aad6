#include "uqe/uql/token.hpp"

#include <cctype>
#include <unordered_map>

#include "uqe/util/text.hpp"

namespace uqe::uql {

const char* token_kind_name(TokenKind k) {
  switch (k) {
    case TokenKind::Select: return "SELECT";
    case TokenKind::From: return "FROM";
    case TokenKind::Where: return "WHERE";
    case TokenKind::As: return "AS";
    case TokenKind::Limit: return "LIMIT";
    case TokenKind::Group: return "GROUP";
    case TokenKind::Order: return "ORDER";
    case TokenKind::By: return "BY";
    case TokenKind::To: return "TO";
    case TokenKind::And: return "AND";
    case TokenKind::Or: return "OR";
    case TokenKind::Count: return "COUNT";
    case TokenKind::Avg: return "AVG";
    case TokenKind::Sum: return "SUM";
    case TokenKind::Desc: return "DESC";
    case TokenKind::Separator: return "SEPARATOR";
    case TokenKind::All: return "ALL";
    case TokenKind::NlLiteral: return "NL_LITERAL";
    case TokenKind::VarName: return "VAR_NAME";
    case TokenKind::CompareOperator: return "COMPARE_OPERATOR";
    case TokenKind::Integer: return "INTEGER";
    case TokenKind::Float: return "FLOAT";
    case TokenKind::LeftParenthesis: return "LEFT_PARENTHESIS";
    case TokenKind::RightParenthesis: return "RIGHT_PARENTHESIS";
    case TokenKind::End: return "END";
  }
  return "?";
}

std::string Token::nl_text() const {
  // lexeme is the full quoted form; drop quotes and resolve \X -> X
  std::string out;
  out.reserve(lexeme.size());
  for (std::size_t i = 1; i + 1 < lexeme.size(); ++i) {
    if (lexeme[i] == '\\' && i + 2 < lexeme.size()) {
      out.push_back(lexeme[i + 1]);
      ++i;
    } else {
      out.push_back(lexeme[i]);
    }
  }
  return out;
}

namespace {

const std::unordered_map<std::string, TokenKind>& reserved_words() {
  static const std::unordered_map<std::string, TokenKind> map = {
      {"select", TokenKind::Select}, {"from", TokenKind::From},
      {"where", TokenKind::Where},   {"as", TokenKind::As},
      {"limit", TokenKind::Limit},   {"group", TokenKind::Group},
      {"order", TokenKind::Order},   {"by", TokenKind::By},
      {"to", TokenKind::To},         {"and", TokenKind::And},
      {"or", TokenKind::Or},         {"count", TokenKind::Count},
      {"avg", TokenKind::Avg},       {"sum", TokenKind::Sum},
      {"desc", TokenKind::Desc},
  };
  return map;
}

bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = src.size();

  auto push = [&](TokenKind kind, std::size_t begin, std::size_t end) {
    out.push_back(Token{kind, std::string(src.substr(begin, end - begin)), Span{begin, end}});
  };

  while (i < n) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;

    if (c == '"') {
      // "((?:\\.|[^"\\])*)"
      std::size_t j = i + 1;
      while (j < n) {
        if (src[j] == '\\' && j + 1 < n)
          j += 2;
        else if (src[j] == '"')
          break;
        else
          ++j;
      }
      if (j >= n)
        throw Error("parse", "lexical",
                    "unterminated string literal", Span{start, n});
      push(TokenKind::NlLiteral, start, j + 1);
      i = j + 1;
      continue;
    }

    if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < n && ident_char(src[j])) ++j;
      // dotted identifier: name(.name)*
      while (j < n && src[j] == '.' && j + 1 < n && ident_start(src[j + 1])) {
        j += 2;
        while (j < n && ident_char(src[j])) ++j;
      }
      std::string word = to_lower(src.substr(start, j - start));
      auto it = reserved_words().find(word);
      push(it != reserved_words().end() ? it->second : TokenKind::VarName, start, j);
      i = j;
      continue;
    }

    // numbers: FLOAT wants [+-]?digits*.digits+, INTEGER wants -?digits+
    if (digit(c) || c == '-' || c == '+' || c == '.') {
      std::size_t j = i;
      if (src[j] == '+' || src[j] == '-') ++j;
      std::size_t int_digits = j;
      while (j < n && digit(src[j])) ++j;
      const bool has_int_digits = j > int_digits;
      if (j < n && src[j] == '.' && j + 1 < n && digit(src[j + 1])) {
        ++j;
        while (j < n && digit(src[j])) ++j;
        push(TokenKind::Float, start, j);
        i = j;
        continue;
      }
      if (has_int_digits && c != '+') {
        push(TokenKind::Integer, start, j);
        i = j;
        continue;
      }
      // fall through to operators for a bare '-', error otherwise below
      if (c != '-')
        throw Error("parse", "lexical", "unexpected character '" + std::string(1, c) + "'",
                    Span{start, start + 1});
    }

    auto two = i + 1 < n ? src.substr(i, 2) : std::string_view{};
    if (two == "<>" || two == ">=" || two == "<=" || two == "!=") {
      push(TokenKind::CompareOperator, i, i + 2);
      i += 2;
      continue;
    }
    if (c == '>' || c == '<' || c == '=') {
      push(TokenKind::CompareOperator, i, i + 1);
      ++i;
      continue;
    }
    switch (c) {
      case ',': push(TokenKind::Separator, i, i + 1); ++i; continue;
      case '*': push(TokenKind::All, i, i + 1); ++i; continue;
      case '(': push(TokenKind::LeftParenthesis, i, i + 1); ++i; continue;
      case ')': push(TokenKind::RightParenthesis, i, i + 1); ++i; continue;
      default:
        throw Error("parse", "lexical", "unexpected character '" + std::string(1, c) + "'",
                    Span{i, i + 1});
    }
  }
  out.push_back(Token{TokenKind::End, "", Span{n, n}});
  return out;
}

}  // namespace uqe::uql
