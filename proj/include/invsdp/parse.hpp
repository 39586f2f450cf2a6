#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "invsdp/polynomial.hpp"

namespace invsdp {

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line, int col)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg), line(line), col(col) {}
  int line;
  int col;
};

struct Token {
  enum Kind { Ident, Number, Punct, End };
  Kind kind = End;
  std::string text;
  int line = 1;
  int col = 1;
};

// Tokenizer for polynomial expressions and the program language. '#' starts a
// comment that runs to end of line.
class Lexer {
 public:
  explicit Lexer(std::string_view src);

  const Token& peek(std::size_t k = 0) const;
  Token next();
  bool at_end() const { return peek().kind == Token::End; }
  bool is(const std::string& punct_or_word, std::size_t k = 0) const;
  bool accept(const std::string& punct_or_word);
  Token expect(const std::string& punct_or_word);
  Token expect_ident();
  [[noreturn]] void fail(const std::string& msg) const;

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

// expr := term (('+'|'-') term)*; term := unary (('*'|'/')? unary)*;
// unary := ('-'|'+') unary | power; power := primary ('^' int)?
// A bare juxtaposition ("2x", "3(x+1)") multiplies. Division only by constants.
QPolynomial parse_expr(Lexer& lx, const VarList& vars);
QPolynomial parse_polynomial(std::string_view text, const VarList& vars);

}  // namespace invsdp
