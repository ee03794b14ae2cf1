#pragma once

// Smooth robustness R*, its derivative dR*, and full gradients.
//
// R* runs the adaptive-window recursion with soft min/max in place of
// conjunction/disjunction, -lo in place of "lo <= 0" and lo in place of
// "lo > 0". dR* pairs every soft operation with its derivative.
//
// Three ways to obtain the gradient over all (sample, variable) entries:
//   PerVariable   one scalar dR* recursion per entry
//   ForwardVector one recursion carrying a dense derivative vector
//   Reverse       a memoized evaluation graph and one adjoint sweep
// They differ only in floating-point summation order.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "gradstl/error.hpp"
#include "gradstl/expr.hpp"
#include "gradstl/formula.hpp"
#include "gradstl/recursion.hpp"
#include "gradstl/signal.hpp"
#include "gradstl/smooth.hpp"

namespace gradstl {

class SmoothAlgebra {
 public:
  using Value = double;

  SmoothAlgebra(Gamma gamma, const Signal& s) : gamma_(gamma), signal_(s) {}

  double atom(const FormulaNode& a, std::size_t n) const {
    return eval_expr(*a.f, signal_.sample(n)) - a.threshold;
  }
  double negate(double v) const { return -v; }
  double conj(double a, double b) const { return smooth_min(gamma_, a, b); }
  double disj(double a, double b) const { return smooth_max(gamma_, a, b); }
  double lo_reached(double lo) const { return -lo; }
  double lo_pending(double lo) const { return lo; }

 private:
  Gamma gamma_;
  const Signal& signal_;
};

inline double rstar(Gamma gamma, const Signal& s, const Formula& f, std::size_t n,
                    const VisitObserver& observer = {}) {
  SmoothAlgebra algebra(gamma, s);
  Recursion<SmoothAlgebra> rec(algebra, s);
  if (observer) rec.set_observer(&observer);
  return rec(f, n);
}

// R* at gamma = 0: every soft operation is the exact min/max.
inline double hard_robustness(const Signal& s, const Formula& f, std::size_t n = 0) {
  return rstar(Gamma(0.0), s, f, n);
}

struct ValueAndDerivative {
  double value = 0.0;
  double derivative = 0.0;
};

// Value of R* and its derivative with respect to one signal entry.
class DerivativeAlgebra {
 public:
  using Value = ValueAndDerivative;

  DerivativeAlgebra(Gamma gamma, const Signal& s, std::size_t var, std::size_t k)
      : gamma_(gamma), signal_(s), var_(var), k_(k) {}

  Value atom(const FormulaNode& a, std::size_t n) const {
    const auto sample = signal_.sample(n);
    return {eval_expr(*a.f, sample) - a.threshold,
            n == k_ ? d_expr(*a.f, sample, var_) : 0.0};
  }
  Value negate(const Value& v) const { return {-v.value, -v.derivative}; }
  Value conj(const Value& a, const Value& b) const {
    return {smooth_min(gamma_, a.value, b.value),
            d_smooth_min(gamma_, a.value, a.derivative, b.value, b.derivative)};
  }
  Value disj(const Value& a, const Value& b) const {
    return {smooth_max(gamma_, a.value, b.value),
            d_smooth_max(gamma_, a.value, a.derivative, b.value, b.derivative)};
  }
  Value lo_reached(double lo) const { return {-lo, 0.0}; }
  Value lo_pending(double lo) const { return {lo, 0.0}; }

 private:
  Gamma gamma_;
  const Signal& signal_;
  std::size_t var_;
  std::size_t k_;
};

namespace detail {

inline void require_smooth(Gamma gamma) {
  if (!gamma.smooth()) {
    throw NonPositiveGamma("derivatives need gamma > 0, got " + to_string(gamma));
  }
}

}  // namespace detail

// dR*/dv_{var,k}: derivative of R*(f, n) with respect to variable `var` of
// sample `k`.
inline double drstar(Gamma gamma, const Signal& s, const Formula& f, std::size_t n,
                     std::size_t var, std::size_t k) {
  detail::require_smooth(gamma);
  if (k >= s.size()) {
    throw IndexError("sample " + std::to_string(k) + " out of range");
  }
  if (var >= s.width()) {
    throw IndexError("variable " + std::to_string(var) + " out of range");
  }
  DerivativeAlgebra algebra(gamma, s, var, k);
  Recursion<DerivativeAlgebra> rec(algebra, s);
  return rec(f, n).derivative;
}

// d(robustness)/d(entry) for every entry of a signal, same layout as the
// signal's value matrix.
class GradientTensor {
 public:
  GradientTensor() = default;
  GradientTensor(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), entries_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& at(std::size_t k, std::size_t i) { return entries_.at(k * cols_ + i); }
  double at(std::size_t k, std::size_t i) const { return entries_.at(k * cols_ + i); }

  std::vector<double>& entries() noexcept { return entries_; }
  const std::vector<double>& entries() const noexcept { return entries_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

struct DualVector {
  double value = 0.0;
  std::vector<double> d;
};

class VectorDerivativeAlgebra {
 public:
  using Value = DualVector;

  VectorDerivativeAlgebra(Gamma gamma, const Signal& s) : gamma_(gamma), signal_(s) {}

  Value atom(const FormulaNode& a, std::size_t n) const {
    const auto sample = signal_.sample(n);
    Value v{eval_expr(*a.f, sample) - a.threshold,
            std::vector<double>(signal_.values().size(), 0.0)};
    for (std::size_t i : variables(*a.f)) {
      v.d[n * signal_.width() + i] = d_expr(*a.f, sample, i);
    }
    return v;
  }
  Value negate(const Value& v) const {
    Value out{-v.value, v.d};
    for (double& x : out.d) x = -x;
    return out;
  }
  Value conj(const Value& a, const Value& b) const {
    Value out{smooth_min(gamma_, a.value, b.value), a.d};
    for (std::size_t j = 0; j < out.d.size(); ++j) {
      out.d[j] = d_smooth_min(gamma_, a.value, a.d[j], b.value, b.d[j]);
    }
    return out;
  }
  Value disj(const Value& a, const Value& b) const {
    Value out{smooth_max(gamma_, a.value, b.value), a.d};
    for (std::size_t j = 0; j < out.d.size(); ++j) {
      out.d[j] = d_smooth_max(gamma_, a.value, a.d[j], b.value, b.d[j]);
    }
    return out;
  }
  Value lo_reached(double lo) const { return constant(-lo); }
  Value lo_pending(double lo) const { return constant(lo); }

 private:
  Value constant(double v) const {
    return {v, std::vector<double>(signal_.values().size(), 0.0)};
  }

  Gamma gamma_;
  const Signal& signal_;
};

// R* unrolled into a DAG of min/max/negation nodes over atoms and constants.
// The shape depends only on the formula, the evaluation position and the
// signal's timestamps, so one graph serves any values on those timestamps.
class RobustnessGraph {
 public:
  enum class Op : std::uint8_t { Constant, Atom, Neg, Min, Max };

  struct Node {
    Op op = Op::Constant;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double constant = 0.0;
    const FormulaNode* atom = nullptr;
    std::size_t sample = 0;
  };

  RobustnessGraph(const Signal& s, const Formula& f, std::size_t n)
      : formula_(f), rows_(s.size()), cols_(s.width()), times_(s.times()) {
    Builder builder{this};
    Recursion<Builder> rec(builder, s);
    rec.set_memoize(true);
    root_ = rec(f, n);
    for (const Node& node : nodes_) {
      if (node.op == Op::Atom) atom_vars_.push_back(variables(*node.atom->f));
      else atom_vars_.emplace_back();
    }
  }

  std::size_t node_count() const noexcept { return nodes_.size(); }

  double value(Gamma gamma, const Signal& s) const {
    check_signal(s);
    std::vector<double> vals;
    forward(gamma, s, vals);
    return vals[root_];
  }

  // Robustness value and full gradient (gamma > 0).
  std::pair<double, GradientTensor> value_and_gradient(Gamma gamma,
                                                       const Signal& s) const {
    detail::require_smooth(gamma);
    check_signal(s);
    std::vector<double> vals;
    forward(gamma, s, vals);
    std::vector<double> adj(nodes_.size(), 0.0);
    adj[root_] = 1.0;
    GradientTensor grad(rows_, cols_);
    for (std::size_t idx = nodes_.size(); idx-- > 0;) {
      const Node& node = nodes_[idx];
      const double g = adj[idx];
      if (g == 0.0) continue;
      switch (node.op) {
        case Op::Constant:
          break;
        case Op::Atom: {
          const auto sample = s.sample(node.sample);
          for (std::size_t i : atom_vars_[idx]) {
            grad.at(node.sample, i) += g * d_expr(*node.atom->f, sample, i);
          }
          break;
        }
        case Op::Neg:
          adj[node.a] -= g;
          break;
        case Op::Max:
          adj[node.a] += g * softmax_weight(gamma, vals[node.a], vals[node.b]);
          adj[node.b] += g * softmax_weight(gamma, vals[node.b], vals[node.a]);
          break;
        case Op::Min:
          adj[node.a] += g * softmax_weight(gamma, -vals[node.a], -vals[node.b]);
          adj[node.b] += g * softmax_weight(gamma, -vals[node.b], -vals[node.a]);
          break;
      }
    }
    return {vals[root_], std::move(grad)};
  }

 private:
  struct Builder {
    using Value = std::uint32_t;
    RobustnessGraph* g;

    Value add(Node node) const {
      g->nodes_.push_back(node);
      return static_cast<Value>(g->nodes_.size() - 1);
    }
    Value atom(const FormulaNode& a, std::size_t n) const {
      Node node;
      node.op = Op::Atom;
      node.atom = &a;
      node.sample = n;
      return add(node);
    }
    Value negate(Value v) const { return add({Op::Neg, v, 0, 0.0, nullptr, 0}); }
    Value conj(Value a, Value b) const { return add({Op::Min, a, b, 0.0, nullptr, 0}); }
    Value disj(Value a, Value b) const { return add({Op::Max, a, b, 0.0, nullptr, 0}); }
    Value lo_reached(double lo) const {
      return add({Op::Constant, 0, 0, -lo, nullptr, 0});
    }
    Value lo_pending(double lo) const {
      return add({Op::Constant, 0, 0, lo, nullptr, 0});
    }
  };

  void check_signal(const Signal& s) const {
    if (s.size() != rows_ || s.width() != cols_ || s.times() != times_) {
      throw ValidationError("signal does not match the graph's timestamps/width");
    }
  }

  void forward(Gamma gamma, const Signal& s, std::vector<double>& vals) const {
    vals.assign(nodes_.size(), 0.0);
    for (std::size_t idx = 0; idx < nodes_.size(); ++idx) {
      const Node& node = nodes_[idx];
      switch (node.op) {
        case Op::Constant:
          vals[idx] = node.constant;
          break;
        case Op::Atom:
          vals[idx] = eval_expr(*node.atom->f, s.sample(node.sample)) -
                      node.atom->threshold;
          break;
        case Op::Neg:
          vals[idx] = -vals[node.a];
          break;
        case Op::Min:
          vals[idx] = smooth_min(gamma, vals[node.a], vals[node.b]);
          break;
        case Op::Max:
          vals[idx] = smooth_max(gamma, vals[node.a], vals[node.b]);
          break;
      }
    }
  }

  Formula formula_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> times_;
  std::vector<Node> nodes_;
  std::vector<std::vector<std::size_t>> atom_vars_;
  std::uint32_t root_ = 0;
};

enum class GradientMode { PerVariable, ForwardVector, Reverse };

inline GradientTensor gradient(Gamma gamma, const Signal& s, const Formula& f,
                               std::size_t n,
                               GradientMode mode = GradientMode::Reverse) {
  detail::require_smooth(gamma);
  GradientTensor grad(s.size(), s.width());
  switch (mode) {
    case GradientMode::PerVariable:
      for (std::size_t k = 0; k < s.size(); ++k) {
        for (std::size_t i = 0; i < s.width(); ++i) {
          grad.at(k, i) = drstar(gamma, s, f, n, i, k);
        }
      }
      return grad;
    case GradientMode::ForwardVector: {
      VectorDerivativeAlgebra algebra(gamma, s);
      Recursion<VectorDerivativeAlgebra> rec(algebra, s);
      grad.entries() = rec(f, n).d;
      return grad;
    }
    case GradientMode::Reverse:
      return RobustnessGraph(s, f, n).value_and_gradient(gamma, s).second;
  }
  return grad;
}

// Gradient CSV: same header and time column as the signal it belongs to.
inline void write_gradient(std::ostream& out, const GradientTensor& g,
                           const Signal& s) {
  if (g.rows() != s.size() || g.cols() != s.width()) {
    throw ValidationError("gradient shape does not match the signal");
  }
  write_matrix_csv(out, s.times(), s.names(), g.entries());
}

inline void save_gradient(const GradientTensor& g, const Signal& s,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write gradient file " + path.string());
  write_gradient(out, g, s);
}

}  // namespace gradstl
