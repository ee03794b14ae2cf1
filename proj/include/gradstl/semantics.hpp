#pragma once

// Boolean satisfaction.
//
// eval_estar walks the signal with the adaptive temporal window (see
// recursion.hpp). eval_oracle and robustness_oracle are the direct
// quantifier / set definitions: they enumerate every sample whose absolute
// time lies in [t_n + lo, t_n + hi]. They are slow and exist as ground
// truth.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "gradstl/error.hpp"
#include "gradstl/expr.hpp"
#include "gradstl/formula.hpp"
#include "gradstl/recursion.hpp"
#include "gradstl/signal.hpp"

namespace gradstl {

class BooleanAlgebra {
 public:
  using Value = bool;

  explicit BooleanAlgebra(const Signal& s) : signal_(s) {}

  bool atom(const FormulaNode& a, std::size_t n) const {
    return eval_expr(*a.f, signal_.sample(n)) > a.threshold;
  }
  bool negate(bool v) const { return !v; }
  bool conj(bool a, bool b) const { return a && b; }
  bool disj(bool a, bool b) const { return a || b; }
  bool lo_reached(double lo) const { return lo <= 0.0; }
  bool lo_pending(double lo) const { return lo > 0.0; }

 private:
  const Signal& signal_;
};

struct EstarResult {
  bool value = false;
  EvalStats stats;
};

// Both operands of every connective are evaluated, so the visit sequence
// and call count do not depend on intermediate truth values.
inline EstarResult eval_estar(const Signal& s, const Formula& f, std::size_t n,
                              const VisitObserver& observer = {}) {
  BooleanAlgebra algebra(s);
  Recursion<BooleanAlgebra> rec(algebra, s);
  EstarResult result;
  rec.set_stats(&result.stats);
  if (observer) rec.set_observer(&observer);
  result.value = rec(f, n);
  return result;
}

inline bool satisfies(const Signal& s, const Formula& f, std::size_t n = 0) {
  return eval_estar(s, f, n).value;
}

namespace detail {

inline void check_position(const Signal& s, std::size_t n) {
  if (n >= s.size()) {
    throw IndexError("evaluation position " + std::to_string(n) +
                     " is outside a signal of " + std::to_string(s.size()) +
                     " samples");
  }
}

// Sample indices i with t_n + w.lo <= t_i <= t_n + w.hi.
inline std::vector<std::size_t> window_samples(const Signal& s, std::size_t n,
                                               const Window& w) {
  std::vector<std::size_t> out;
  const double from = s.time(n) + w.lo;
  const double to = s.time(n) + w.hi;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (from <= s.time(i) && s.time(i) <= to) out.push_back(i);
  }
  return out;
}

}  // namespace detail

inline bool eval_oracle(const Signal& s, const Formula& f, std::size_t n) {
  detail::check_position(s, n);
  const FormulaNode& node = f.node();
  switch (node.kind) {
    case FormulaKind::Atom:
      return eval_expr(*node.f, s.sample(n)) > node.threshold;
    case FormulaKind::Not:
      return !eval_oracle(s, node.args[0], n);
    case FormulaKind::And:
      return eval_oracle(s, node.args[0], n) && eval_oracle(s, node.args[1], n);
    case FormulaKind::Always:
      for (std::size_t i : detail::window_samples(s, n, node.window)) {
        if (!eval_oracle(s, node.args[0], i)) return false;
      }
      return true;
    case FormulaKind::Eventually:
      for (std::size_t i : detail::window_samples(s, n, node.window)) {
        if (eval_oracle(s, node.args[0], i)) return true;
      }
      return false;
    case FormulaKind::Until: {
      const double from = s.time(n) + node.window.lo;
      for (std::size_t i : detail::window_samples(s, n, node.window)) {
        if (!eval_oracle(s, node.args[1], i)) continue;
        bool held = true;
        for (std::size_t j = 0; j < s.size() && held; ++j) {
          if (from <= s.time(j) && s.time(j) <= s.time(i)) {
            held = eval_oracle(s, node.args[0], j);
          }
        }
        if (held) return true;
      }
      return false;
    }
  }
  throw Error("unknown formula node");
}

// Classical (non-smooth) robustness over explicit sample sets.
inline double robustness_oracle(const Signal& s, const Formula& f, std::size_t n) {
  detail::check_position(s, n);
  const FormulaNode& node = f.node();
  auto nonempty = [&](const std::vector<std::size_t>& idx) {
    if (idx.empty()) {
      throw EmptyWindow("window " + detail::print_window(node.window) +
                        " holds no sample when evaluated at position " +
                        std::to_string(n));
    }
    return idx;
  };
  switch (node.kind) {
    case FormulaKind::Atom:
      return eval_expr(*node.f, s.sample(n)) - node.threshold;
    case FormulaKind::Not:
      return -robustness_oracle(s, node.args[0], n);
    case FormulaKind::And:
      return std::min(robustness_oracle(s, node.args[0], n),
                      robustness_oracle(s, node.args[1], n));
    case FormulaKind::Always: {
      double r = std::numeric_limits<double>::infinity();
      for (std::size_t i : nonempty(detail::window_samples(s, n, node.window))) {
        r = std::min(r, robustness_oracle(s, node.args[0], i));
      }
      return r;
    }
    case FormulaKind::Eventually: {
      double r = -std::numeric_limits<double>::infinity();
      for (std::size_t i : nonempty(detail::window_samples(s, n, node.window))) {
        r = std::max(r, robustness_oracle(s, node.args[0], i));
      }
      return r;
    }
    case FormulaKind::Until: {
      const double from = s.time(n) + node.window.lo;
      double r = -std::numeric_limits<double>::infinity();
      for (std::size_t i : nonempty(detail::window_samples(s, n, node.window))) {
        double held = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < s.size(); ++j) {
          if (from <= s.time(j) && s.time(j) <= s.time(i)) {
            held = std::min(held, robustness_oracle(s, node.args[0], j));
          }
        }
        r = std::max(r, std::min(robustness_oracle(s, node.args[1], i), held));
      }
      return r;
    }
  }
  throw Error("unknown formula node");
}

}  // namespace gradstl
