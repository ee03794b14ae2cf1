#pragma once

// Differentiable real-valued functions of a single sample vector.
//
// An Expr is an immutable tree. Leaves are constants and state variables
// (bound by column index); inner nodes are + - * / unary minus, integer
// powers and sqrt. Evaluation and partial derivatives are structural, so
// derivatives are exact up to floating point.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gradstl/detail/number.hpp"
#include "gradstl/error.hpp"

namespace gradstl {

enum class ExprKind { Constant, Var, Add, Sub, Mul, Div, Neg, PowInt, Sqrt };

struct ExprNode;

class Expr {
 public:
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}

  const ExprNode& node() const { return *node_; }
  ExprKind kind() const;

 private:
  std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
  ExprKind kind = ExprKind::Constant;
  double value = 0.0;       // Constant
  std::size_t index = 0;    // Var
  std::string name;         // Var
  unsigned exponent = 0;    // PowInt
  std::vector<Expr> args;   // operands, left to right
};

inline ExprKind Expr::kind() const { return node_->kind; }

namespace detail {

inline Expr make_expr(ExprNode node) {
  return Expr(std::make_shared<const ExprNode>(std::move(node)));
}

inline Expr make_op(ExprKind kind, std::vector<Expr> args) {
  ExprNode node;
  node.kind = kind;
  node.args = std::move(args);
  return make_expr(std::move(node));
}

}  // namespace detail

inline Expr constant(double value) {
  if (!std::isfinite(value)) {
    throw DomainError("expression constant must be finite");
  }
  ExprNode node;
  node.kind = ExprKind::Constant;
  node.value = value;
  return detail::make_expr(std::move(node));
}

inline Expr var(std::size_t index, std::string name) {
  ExprNode node;
  node.kind = ExprKind::Var;
  node.index = index;
  node.name = std::move(name);
  return detail::make_expr(std::move(node));
}

inline Expr operator+(Expr a, Expr b) {
  return detail::make_op(ExprKind::Add, {std::move(a), std::move(b)});
}
inline Expr operator-(Expr a, Expr b) {
  return detail::make_op(ExprKind::Sub, {std::move(a), std::move(b)});
}
inline Expr operator*(Expr a, Expr b) {
  return detail::make_op(ExprKind::Mul, {std::move(a), std::move(b)});
}
inline Expr operator/(Expr a, Expr b) {
  return detail::make_op(ExprKind::Div, {std::move(a), std::move(b)});
}
inline Expr operator-(Expr a) {
  return detail::make_op(ExprKind::Neg, {std::move(a)});
}

inline Expr pow(Expr base, unsigned exponent) {
  ExprNode node;
  node.kind = ExprKind::PowInt;
  node.exponent = exponent;
  node.args = {std::move(base)};
  return detail::make_expr(std::move(node));
}

inline Expr sqrt(Expr arg) {
  return detail::make_op(ExprKind::Sqrt, {std::move(arg)});
}

// Structural equality; constants compare by exact value.
inline bool operator==(const Expr& a, const Expr& b) {
  const ExprNode& x = a.node();
  const ExprNode& y = b.node();
  if (&x == &y) return true;
  if (x.kind != y.kind || x.args.size() != y.args.size()) return false;
  switch (x.kind) {
    case ExprKind::Constant:
      return x.value == y.value;
    case ExprKind::Var:
      return x.index == y.index && x.name == y.name;
    case ExprKind::PowInt:
      if (x.exponent != y.exponent) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < x.args.size(); ++i) {
    if (!(x.args[i] == y.args[i])) return false;
  }
  return true;
}

namespace detail {

inline double int_power(double base, unsigned exponent) {
  double result = 1.0;
  for (unsigned i = 0; i < exponent; ++i) result *= base;
  return result;
}

}  // namespace detail

inline double eval_expr(const Expr& e, std::span<const double> sample) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Constant:
      return n.value;
    case ExprKind::Var:
      if (n.index >= sample.size()) {
        throw UnboundVariable("variable '" + n.name + "' (column " +
                              std::to_string(n.index) +
                              ") is outside a sample of width " +
                              std::to_string(sample.size()));
      }
      return sample[n.index];
    case ExprKind::Add:
      return eval_expr(n.args[0], sample) + eval_expr(n.args[1], sample);
    case ExprKind::Sub:
      return eval_expr(n.args[0], sample) - eval_expr(n.args[1], sample);
    case ExprKind::Mul:
      return eval_expr(n.args[0], sample) * eval_expr(n.args[1], sample);
    case ExprKind::Div: {
      const double num = eval_expr(n.args[0], sample);
      const double den = eval_expr(n.args[1], sample);
      if (den == 0.0) throw DomainError("division by zero");
      return num / den;
    }
    case ExprKind::Neg:
      return -eval_expr(n.args[0], sample);
    case ExprKind::PowInt:
      return detail::int_power(eval_expr(n.args[0], sample), n.exponent);
    case ExprKind::Sqrt: {
      const double arg = eval_expr(n.args[0], sample);
      if (arg < 0.0) throw DomainError("sqrt of a negative value");
      return std::sqrt(arg);
    }
  }
  return 0.0;
}

inline bool mentions(const Expr& e, std::size_t var_index) {
  const ExprNode& n = e.node();
  if (n.kind == ExprKind::Var) return n.index == var_index;
  return std::any_of(n.args.begin(), n.args.end(),
                     [&](const Expr& a) { return mentions(a, var_index); });
}

// Sorted, deduplicated column indices referenced by `e`.
inline std::vector<std::size_t> variables(const Expr& e) {
  std::vector<std::size_t> out;
  auto walk = [&](auto&& self, const Expr& x) -> void {
    if (x.kind() == ExprKind::Var) out.push_back(x.node().index);
    for (const Expr& a : x.node().args) self(self, a);
  };
  walk(walk, e);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Partial derivative of `e` with respect to column `var_index`, at `sample`.
inline double d_expr(const Expr& e, std::span<const double> sample,
                     std::size_t var_index) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Constant:
      return 0.0;
    case ExprKind::Var:
      if (n.index >= sample.size()) {
        throw UnboundVariable("variable '" + n.name + "' (column " +
                              std::to_string(n.index) +
                              ") is outside a sample of width " +
                              std::to_string(sample.size()));
      }
      return n.index == var_index ? 1.0 : 0.0;
    case ExprKind::Add:
      return d_expr(n.args[0], sample, var_index) +
             d_expr(n.args[1], sample, var_index);
    case ExprKind::Sub:
      return d_expr(n.args[0], sample, var_index) -
             d_expr(n.args[1], sample, var_index);
    case ExprKind::Mul: {
      const double a = eval_expr(n.args[0], sample);
      const double b = eval_expr(n.args[1], sample);
      return d_expr(n.args[0], sample, var_index) * b +
             a * d_expr(n.args[1], sample, var_index);
    }
    case ExprKind::Div: {
      const double a = eval_expr(n.args[0], sample);
      const double b = eval_expr(n.args[1], sample);
      if (b == 0.0) throw DomainError("division by zero");
      const double da = d_expr(n.args[0], sample, var_index);
      const double db = d_expr(n.args[1], sample, var_index);
      return (da * b - a * db) / (b * b);
    }
    case ExprKind::Neg:
      return -d_expr(n.args[0], sample, var_index);
    case ExprKind::PowInt: {
      if (n.exponent == 0) return 0.0;
      const double base = eval_expr(n.args[0], sample);
      const double db = d_expr(n.args[0], sample, var_index);
      return static_cast<double>(n.exponent) *
             detail::int_power(base, n.exponent - 1) * db;
    }
    case ExprKind::Sqrt: {
      const double arg = eval_expr(n.args[0], sample);
      if (arg < 0.0) throw DomainError("sqrt of a negative value");
      if (!mentions(n.args[0], var_index)) return 0.0;
      if (arg == 0.0) {
        throw DomainError("sqrt is not differentiable at 0");
      }
      return d_expr(n.args[0], sample, var_index) / (2.0 * std::sqrt(arg));
    }
  }
  return 0.0;
}

namespace detail {

// Precedence levels used by the printer; higher binds tighter.
enum ExprLevel { kSum = 1, kProduct = 2, kUnary = 3, kAtom = 4 };

inline int expr_level(const Expr& e) {
  switch (e.kind()) {
    case ExprKind::Add:
    case ExprKind::Sub:
      return kSum;
    case ExprKind::Mul:
    case ExprKind::Div:
      return kProduct;
    case ExprKind::Neg:
      return kUnary;
    case ExprKind::Constant:
      return e.node().value < 0.0 || std::signbit(e.node().value) ? kUnary
                                                                   : kAtom;
    case ExprKind::PowInt:
      // x^n sits between unary minus and atoms; treat as unary for operands.
      return kUnary;
    case ExprKind::Var:
    case ExprKind::Sqrt:
      return kAtom;
  }
  return kAtom;
}

inline void print_expr(const Expr& e, std::string& out, int min_level);

inline void print_expr_operand(const Expr& e, std::string& out, int min_level) {
  if (expr_level(e) < min_level) {
    out += '(';
    print_expr(e, out, kSum);
    out += ')';
  } else {
    print_expr(e, out, min_level);
  }
}

inline void print_expr(const Expr& e, std::string& out, int /*min_level*/) {
  const ExprNode& n = e.node();
  switch (n.kind) {
    case ExprKind::Constant:
      out += format_shortest(n.value);
      return;
    case ExprKind::Var:
      out += n.name;
      return;
    case ExprKind::Add:
    case ExprKind::Sub:
      print_expr_operand(n.args[0], out, kSum);
      out += n.kind == ExprKind::Add ? " + " : " - ";
      print_expr_operand(n.args[1], out, kProduct);
      return;
    case ExprKind::Mul:
    case ExprKind::Div:
      print_expr_operand(n.args[0], out, kProduct);
      out += n.kind == ExprKind::Mul ? " * " : " / ";
      print_expr_operand(n.args[1], out, kUnary);
      return;
    case ExprKind::Neg: {
      out += '-';
      const Expr& arg = n.args[0];
      // "-5" would read back as a negative literal, "--x" as nothing sane.
      if (arg.kind() == ExprKind::Constant || arg.kind() == ExprKind::Neg) {
        out += '(';
        print_expr(arg, out, kSum);
        out += ')';
      } else {
        print_expr_operand(arg, out, kUnary);
      }
      return;
    }
    case ExprKind::PowInt:
      print_expr_operand(n.args[0], out, kAtom);
      out += '^';
      out += std::to_string(n.exponent);
      return;
    case ExprKind::Sqrt:
      out += "sqrt(";
      print_expr(n.args[0], out, kSum);
      out += ')';
      return;
  }
}

}  // namespace detail

inline std::string to_string(const Expr& e) {
  std::string out;
  detail::print_expr(e, out, detail::kSum);
  return out;
}

}  // namespace gradstl
