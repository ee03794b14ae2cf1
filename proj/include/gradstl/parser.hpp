#pragma once

// Text syntax for expressions and formulas.
//
//   formula := or
//   or      := and ('|' and)*
//   and     := until ('&' until)*
//   until   := unary ('U' window unary)*          (left-associative)
//   unary   := '!' unary | 'G' window unary | 'F' window unary | primary
//   primary := '(' formula ')' | '{' expr '>' number '}'
//   window  := '[' number ',' number ']'
//
//   expr    := term (('+' | '-') term)*
//   term    := factor (('*' | '/') factor)*
//   factor  := '-' factor | power
//   power   := atom ('^' integer)?
//   atom    := number | identifier | 'sqrt' '(' expr ')' | '(' expr ')'
//
// A '-' directly in front of a numeric literal with no '^' after it reads as
// a negative constant, so printed negative constants round-trip.

#include <cctype>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "gradstl/detail/number.hpp"
#include "gradstl/error.hpp"
#include "gradstl/expr.hpp"
#include "gradstl/formula.hpp"

namespace gradstl {

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& names)
      : text_(text), names_(names) {}

  Formula formula_to_end() {
    Formula f = parse_or();
    expect_end();
    return f;
  }

  Expr expr_to_end() {
    Expr e = parse_sum();
    expect_end();
    return e;
  }

 private:
  // ---- lexing helpers ----------------------------------------------------

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  // Character after the next non-space one, skipping spaces in between.
  char peek_second() {
    skip_ws();
    std::size_t p = pos_ + 1;
    while (p < text_.size() && std::isspace(static_cast<unsigned char>(text_[p]))) {
      ++p;
    }
    return p < text_.size() ? text_[p] : '\0';
  }

  bool accept(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      fail(std::string("expected '") + c + "'" + found());
    }
  }

  void expect_end() {
    if (peek() != '\0') fail("unexpected trailing input" + found());
  }

  std::string found() {
    if (peek() == '\0') return ", found end of input";
    return std::string(", found '") + text_[pos_] + "'";
  }

  [[noreturn]] void fail(const std::string& what) { throw SyntaxError(what, pos_); }

  static bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool is_number_start(char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
  }

  std::string_view identifier() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ >= text_.size() || !is_ident_start(text_[pos_])) {
      fail("expected identifier" + found());
    }
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  // Unsigned decimal literal with optional exponent.
  double unsigned_number() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        while (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
          ++p;
        }
        pos_ = p;
      }
    }
    const auto value = parse_double(text_.substr(start, pos_ - start));
    if (start == pos_ || !value || !std::isfinite(*value)) {
      pos_ = start;
      fail("expected number" + found());
    }
    return *value;
  }

  double signed_number() {
    bool negative = false;
    if (accept('-')) {
      negative = true;
    } else {
      accept('+');
    }
    const double v = unsigned_number();
    return negative ? -v : v;
  }

  // ---- formulas ----------------------------------------------------------

  Formula parse_or() {
    Formula lhs = parse_and();
    while (accept('|')) lhs = derived_or(lhs, parse_and());
    return lhs;
  }

  Formula parse_and() {
    Formula lhs = parse_until();
    while (accept('&')) lhs = conjoin(lhs, parse_until());
    return lhs;
  }

  Formula parse_until() {
    Formula lhs = parse_unary();
    while (peek() == 'U' && !is_ident_char(peek_second_raw())) {
      ++pos_;
      const Window w = window();
      lhs = until(w, lhs, parse_unary());
    }
    return lhs;
  }

  // Character immediately after the next non-space one (no space skipping).
  char peek_second_raw() {
    skip_ws();
    return pos_ + 1 < text_.size() ? text_[pos_ + 1] : '\0';
  }

  Formula parse_unary() {
    const char c = peek();
    if (c == '!') {
      ++pos_;
      return negate(parse_unary());
    }
    if ((c == 'G' || c == 'F') && !is_ident_char(peek_second_raw())) {
      ++pos_;
      const Window w = window();
      Formula body = parse_unary();
      return c == 'G' ? always(w, body) : eventually(w, body);
    }
    return parse_primary();
  }

  Formula parse_primary() {
    if (accept('(')) {
      Formula f = parse_or();
      expect(')');
      return f;
    }
    if (accept('{')) {
      Expr f = parse_sum();
      expect('>');
      const double c = signed_number();
      expect('}');
      return atom(f, c);
    }
    fail("expected '(', '{', '!', 'G', 'F'" + found());
  }

  Window window() {
    expect('[');
    const std::size_t at = pos_;
    const double lo = signed_number();
    expect(',');
    const double hi = signed_number();
    expect(']');
    try {
      detail::check_window({lo, hi});
    } catch (const InvalidInterval& e) {
      throw InvalidInterval(std::string(e.what()) + " at position " +
                            std::to_string(at));
    }
    return {lo, hi};
  }

  // ---- expressions -------------------------------------------------------

  Expr parse_sum() {
    Expr lhs = parse_term();
    while (true) {
      if (accept('+')) {
        lhs = lhs + parse_term();
      } else if (accept('-')) {
        lhs = lhs - parse_term();
      } else {
        return lhs;
      }
    }
  }

  Expr parse_term() {
    Expr lhs = parse_factor();
    while (true) {
      if (accept('*')) {
        lhs = lhs * parse_factor();
      } else if (accept('/')) {
        lhs = lhs / parse_factor();
      } else {
        return lhs;
      }
    }
  }

  Expr parse_factor() {
    if (peek() == '-') {
      if (is_number_start(peek_second())) {
        // Negative literal unless an exponent follows it.
        const std::size_t save = pos_;
        ++pos_;
        const double v = unsigned_number();
        if (peek() != '^') return constant(-v);
        pos_ = save;
      }
      ++pos_;
      return -parse_factor();
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      }
      const auto n = parse_integer(text_.substr(start, pos_ - start));
      if (start == pos_ || !n || *n < 0 ||
          *n > std::numeric_limits<unsigned>::max()) {
        pos_ = start;
        fail("expected nonnegative integer exponent" + found());
      }
      return pow(base, static_cast<unsigned>(*n));
    }
    return base;
  }

  Expr parse_atom() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      expect(')');
      return e;
    }
    if (is_number_start(c)) return constant(unsigned_number());
    if (is_ident_start(c)) {
      const std::size_t start = pos_;
      const std::string_view name = identifier();
      if (name == "sqrt" && peek() == '(') {
        ++pos_;
        Expr arg = parse_sum();
        expect(')');
        return sqrt(arg);
      }
      for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return var(i, names_[i]);
      }
      throw UnknownVariable("unknown variable '" + std::string(name) +
                            "' at position " + std::to_string(start));
    }
    fail("expected expression" + found());
  }

  std::string_view text_;
  const std::vector<std::string>& names_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Parses a formula; identifiers inside atoms bind to `names` by position.
inline Formula parse_formula(std::string_view text,
                             const std::vector<std::string>& names) {
  return detail::Parser(text, names).formula_to_end();
}

inline Expr parse_expr(std::string_view text,
                       const std::vector<std::string>& names) {
  return detail::Parser(text, names).expr_to_end();
}

}  // namespace gradstl
