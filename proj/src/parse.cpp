#include "invsdp/parse.hpp"

#include <cctype>

namespace invsdp {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

}  // namespace

Lexer::Lexer(std::string_view src) {
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    std::size_t start = i, len = 0;
    if (is_ident_start(c)) {
      t.kind = Token::Ident;
      while (start + len < src.size() && is_ident_char(src[start + len])) ++len;
    } else if (is_digit(c) || (c == '.' && i + 1 < src.size() && is_digit(src[i + 1]))) {
      t.kind = Token::Number;
      while (start + len < src.size() && is_digit(src[start + len])) ++len;
      if (start + len < src.size() && src[start + len] == '.') {
        ++len;
        while (start + len < src.size() && is_digit(src[start + len])) ++len;
      }
      // Exponent only when followed by digits, so "2e" stays "2" * e.
      std::size_t e = start + len;
      if (e < src.size() && (src[e] == 'e' || src[e] == 'E')) {
        std::size_t k = e + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && is_digit(src[k])) {
          while (k < src.size() && is_digit(src[k])) ++k;
          len = k - start;
        }
      }
    } else {
      t.kind = Token::Punct;
      static const char* two[] = {"==", "<=", ">=", ":=", "!=", "&&"};
      len = 1;
      for (const char* p : two)
        if (src.substr(i, 2) == p) len = 2;
      if (len == 1 && std::string_view("+-*/^(){};,=<>:[]").find(c) == std::string_view::npos)
        throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
    t.text = std::string(src.substr(start, len));
    advance(len);
    toks_.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.col = col;
  toks_.push_back(end);
}

const Token& Lexer::peek(std::size_t k) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }

Token Lexer::next() {
  Token t = peek();
  if (pos_ + 1 < toks_.size()) ++pos_;
  return t;
}

bool Lexer::is(const std::string& s, std::size_t k) const {
  const Token& t = peek(k);
  return t.kind != Token::End && t.kind != Token::Number && t.text == s;
}

bool Lexer::accept(const std::string& s) {
  if (!is(s)) return false;
  next();
  return true;
}

Token Lexer::expect(const std::string& s) {
  if (!is(s)) fail("expected '" + s + "' but found '" + peek().text + "'");
  return next();
}

Token Lexer::expect_ident() {
  if (peek().kind != Token::Ident) fail("expected identifier but found '" + peek().text + "'");
  return next();
}

void Lexer::fail(const std::string& msg) const { throw ParseError(msg, peek().line, peek().col); }

namespace {

QPolynomial parse_unary(Lexer& lx, const VarList& vars);

QPolynomial parse_primary(Lexer& lx, const VarList& vars) {
  const Token& t = lx.peek();
  if (t.kind == Token::Number) {
    auto q = Rational::parse(t.text);
    if (!q) lx.fail("bad number '" + t.text + "'");
    lx.next();
    return QPolynomial::constant(vars, *q);
  }
  if (t.kind == Token::Ident) {
    if (!var_index(vars, t.text)) lx.fail("unknown variable '" + t.text + "'");
    std::string name = t.text;
    lx.next();
    return QPolynomial::variable(vars, name);
  }
  if (lx.accept("(")) {
    QPolynomial p = parse_expr(lx, vars);
    lx.expect(")");
    return p;
  }
  lx.fail("expected expression but found '" + t.text + "'");
}

QPolynomial parse_power(Lexer& lx, const VarList& vars) {
  QPolynomial base = parse_primary(lx, vars);
  if (lx.accept("^")) {
    const Token& t = lx.peek();
    if (t.kind != Token::Number || t.text.find_first_not_of("0123456789") != std::string::npos)
      lx.fail("exponent must be a non-negative integer literal");
    unsigned long e = std::stoul(t.text);
    if (e > 64) lx.fail("exponent too large");
    lx.next();
    return base.pow(static_cast<unsigned>(e));
  }
  return base;
}

QPolynomial parse_unary(Lexer& lx, const VarList& vars) {
  if (lx.accept("-")) return -parse_unary(lx, vars);
  if (lx.accept("+")) return parse_unary(lx, vars);
  return parse_power(lx, vars);
}

// Juxtaposition is only read right after a numeric literal ("2x", "3(x+1)"),
// so a keyword following an expression never becomes a factor.
bool juxtaposed(const Lexer& lx, bool after_number) {
  return after_number && (lx.peek().kind == Token::Ident || lx.is("("));
}

QPolynomial parse_term(Lexer& lx, const VarList& vars) {
  std::size_t k = 0;
  while (lx.is("-", k) || lx.is("+", k)) ++k;
  bool after_number = lx.peek(k).kind == Token::Number;
  QPolynomial acc = parse_unary(lx, vars);
  while (true) {
    bool num_next = lx.peek(1).kind == Token::Number;
    if (lx.accept("*")) {
      acc = acc * parse_unary(lx, vars);
      after_number = num_next;
    } else if (lx.is("/")) {
      Token op = lx.next();
      after_number = lx.peek().kind == Token::Number;
      QPolynomial d = parse_unary(lx, vars);
      if (!d.is_constant()) throw ParseError("division by a non-constant expression", op.line, op.col);
      Rational c = d.constant_term();
      if (c.is_zero()) throw ParseError("division by zero", op.line, op.col);
      acc *= Rational(1) / c;
    } else if (juxtaposed(lx, after_number)) {
      acc = acc * parse_power(lx, vars);
      after_number = false;
    } else {
      return acc;
    }
  }
}

}  // namespace

QPolynomial parse_expr(Lexer& lx, const VarList& vars) {
  QPolynomial acc = parse_term(lx, vars);
  while (true) {
    if (lx.accept("+"))
      acc += parse_term(lx, vars);
    else if (lx.accept("-"))
      acc -= parse_term(lx, vars);
    else
      return acc;
  }
}

QPolynomial parse_polynomial(std::string_view text, const VarList& vars) {
  Lexer lx(text);
  QPolynomial p = parse_expr(lx, vars);
  if (!lx.at_end()) lx.fail("trailing input '" + lx.peek().text + "'");
  return p;
}

}  // namespace invsdp
