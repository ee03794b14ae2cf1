#pragma once

// STL constraint trees.
//
// Temporal operators carry a window [lo, hi] of relative times. Windows of
// user-built formulas satisfy 0 <= lo <= hi; evaluators shift them while
// walking forward through a signal but never build new nodes for that.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gradstl/detail/number.hpp"
#include "gradstl/error.hpp"
#include "gradstl/expr.hpp"

namespace gradstl {

struct Window {
  double lo = 0.0;
  double hi = 0.0;

  Window shifted(double dt) const { return {lo - dt, hi - dt}; }
  friend bool operator==(const Window&, const Window&) = default;
};

enum class FormulaKind { Atom, Not, And, Always, Eventually, Until };

inline bool is_temporal(FormulaKind k) {
  return k == FormulaKind::Always || k == FormulaKind::Eventually ||
         k == FormulaKind::Until;
}

struct FormulaNode;

class Formula {
 public:
  explicit Formula(std::shared_ptr<const FormulaNode> node)
      : node_(std::move(node)) {}

  const FormulaNode& node() const { return *node_; }
  const FormulaNode* get() const { return node_.get(); }
  FormulaKind kind() const;

 private:
  std::shared_ptr<const FormulaNode> node_;
};

struct FormulaNode {
  FormulaKind kind = FormulaKind::Atom;
  std::optional<Expr> f;       // Atom: f(S_n) > threshold
  double threshold = 0.0;      // Atom
  Window window;               // temporal operators
  std::vector<Formula> args;   // operands, left to right
  // Until only: the conjunction of both operands, evaluated as one node.
  std::optional<Formula> both;
};

inline FormulaKind Formula::kind() const { return node_->kind; }

namespace detail {

inline Formula make_formula(FormulaNode node) {
  return Formula(std::make_shared<const FormulaNode>(std::move(node)));
}

inline void check_window(const Window& w) {
  if (!std::isfinite(w.lo) || !std::isfinite(w.hi)) {
    throw InvalidInterval("interval bounds must be finite");
  }
  if (w.lo < 0.0 || w.lo > w.hi) {
    throw InvalidInterval("interval [" + format_shortest(w.lo) + "," +
                          format_shortest(w.hi) +
                          "] must satisfy 0 <= x <= y");
  }
}

}  // namespace detail

inline Formula atom(Expr f, double threshold) {
  if (!std::isfinite(threshold)) {
    throw DomainError("atom threshold must be finite");
  }
  FormulaNode node;
  node.kind = FormulaKind::Atom;
  node.f = std::move(f);
  node.threshold = threshold;
  return detail::make_formula(std::move(node));
}

inline Formula negate(Formula a) {
  FormulaNode node;
  node.kind = FormulaKind::Not;
  node.args = {std::move(a)};
  return detail::make_formula(std::move(node));
}

inline Formula conjoin(Formula a, Formula b) {
  FormulaNode node;
  node.kind = FormulaKind::And;
  node.args = {std::move(a), std::move(b)};
  return detail::make_formula(std::move(node));
}

// a | b, expressed as !(!a & !b).
inline Formula derived_or(Formula a, Formula b) {
  return negate(conjoin(negate(std::move(a)), negate(std::move(b))));
}

inline Formula always(Window w, Formula a) {
  detail::check_window(w);
  FormulaNode node;
  node.kind = FormulaKind::Always;
  node.window = w;
  node.args = {std::move(a)};
  return detail::make_formula(std::move(node));
}

inline Formula eventually(Window w, Formula a) {
  detail::check_window(w);
  FormulaNode node;
  node.kind = FormulaKind::Eventually;
  node.window = w;
  node.args = {std::move(a)};
  return detail::make_formula(std::move(node));
}

inline Formula until(Window w, Formula lhs, Formula rhs) {
  detail::check_window(w);
  FormulaNode node;
  node.kind = FormulaKind::Until;
  node.window = w;
  node.both = conjoin(lhs, rhs);
  node.args = {std::move(lhs), std::move(rhs)};
  return detail::make_formula(std::move(node));
}

// Structural equality (windows and thresholds compared exactly).
inline bool operator==(const Formula& a, const Formula& b) {
  const FormulaNode& x = a.node();
  const FormulaNode& y = b.node();
  if (&x == &y) return true;
  if (x.kind != y.kind || x.args.size() != y.args.size()) return false;
  if (x.kind == FormulaKind::Atom) {
    return x.threshold == y.threshold && *x.f == *y.f;
  }
  if (is_temporal(x.kind) && !(x.window == y.window)) return false;
  for (std::size_t i = 0; i < x.args.size(); ++i) {
    if (!(x.args[i] == y.args[i])) return false;
  }
  return true;
}

// Number of sub-formulae (AST nodes).
inline std::size_t size(const Formula& f) {
  std::size_t total = 1;
  for (const Formula& a : f.node().args) total += size(a);
  return total;
}

// Height of the AST; an atom has depth 1.
inline std::size_t depth(const Formula& f) {
  std::size_t deepest = 0;
  for (const Formula& a : f.node().args) deepest = std::max(deepest, depth(a));
  return deepest + 1;
}

// Largest number of temporal operators on one root-to-leaf path.
inline std::size_t temporal_depth(const Formula& f) {
  std::size_t deepest = 0;
  for (const Formula& a : f.node().args) {
    deepest = std::max(deepest, temporal_depth(a));
  }
  return deepest + (is_temporal(f.kind()) ? 1 : 0);
}

inline std::size_t temporal_count(const Formula& f) {
  std::size_t total = is_temporal(f.kind()) ? 1 : 0;
  for (const Formula& a : f.node().args) total += temporal_count(a);
  return total;
}

// Operands of a left-nested chain of conjunctions, in order.
inline std::vector<Formula> conjuncts(const Formula& f) {
  if (f.kind() != FormulaKind::And) return {f};
  std::vector<Formula> out = conjuncts(f.node().args[0]);
  out.push_back(f.node().args[1]);
  return out;
}

namespace detail {

enum FormulaLevel { kOr = 1, kAnd = 2, kUntil = 3, kPrefix = 4, kPrimary = 5 };

// Matches !(!a & !b) and returns {a, b}.
inline std::optional<std::pair<Formula, Formula>> as_disjunction(const Formula& f) {
  if (f.kind() != FormulaKind::Not) return std::nullopt;
  const Formula& inner = f.node().args[0];
  if (inner.kind() != FormulaKind::And) return std::nullopt;
  const Formula& l = inner.node().args[0];
  const Formula& r = inner.node().args[1];
  if (l.kind() != FormulaKind::Not || r.kind() != FormulaKind::Not) {
    return std::nullopt;
  }
  return std::make_pair(l.node().args[0], r.node().args[0]);
}

inline int formula_level(const Formula& f) {
  switch (f.kind()) {
    case FormulaKind::Atom:
      return kPrimary;
    case FormulaKind::Not:
      return as_disjunction(f) ? kOr : kPrefix;
    case FormulaKind::And:
      return kAnd;
    case FormulaKind::Until:
      return kUntil;
    case FormulaKind::Always:
    case FormulaKind::Eventually:
      return kPrefix;
  }
  return kPrimary;
}

inline std::string print_window(const Window& w) {
  return "[" + format_shortest(w.lo) + "," + format_shortest(w.hi) + "]";
}

inline void print_formula(const Formula& f, std::string& out);

inline void print_operand(const Formula& f, std::string& out, int min_level) {
  if (formula_level(f) < min_level) {
    out += '(';
    print_formula(f, out);
    out += ')';
  } else {
    print_formula(f, out);
  }
}

inline void print_formula(const Formula& f, std::string& out) {
  const FormulaNode& n = f.node();
  switch (n.kind) {
    case FormulaKind::Atom:
      out += "{" + to_string(*n.f) + " > " + format_shortest(n.threshold) + "}";
      return;
    case FormulaKind::Not:
      if (auto parts = as_disjunction(f)) {
        print_operand(parts->first, out, kOr);
        out += " | ";
        print_operand(parts->second, out, kAnd);
        return;
      }
      out += '!';
      print_operand(n.args[0], out, kPrefix);
      return;
    case FormulaKind::And:
      print_operand(n.args[0], out, kAnd);
      out += " & ";
      print_operand(n.args[1], out, kUntil);
      return;
    case FormulaKind::Until:
      print_operand(n.args[0], out, kUntil);
      out += " U" + print_window(n.window) + " ";
      print_operand(n.args[1], out, kPrefix);
      return;
    case FormulaKind::Always:
    case FormulaKind::Eventually:
      out += n.kind == FormulaKind::Always ? "G" : "F";
      out += print_window(n.window) + " ";
      print_operand(n.args[0], out, kPrefix);
      return;
  }
}

}  // namespace detail

inline std::string print_formula(const Formula& f) {
  std::string out;
  detail::print_formula(f, out);
  return out;
}

}  // namespace gradstl
