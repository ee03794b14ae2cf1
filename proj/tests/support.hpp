#pragma once

// Shared fixtures and random-instance generators for the test suites.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gradstl/gradstl.hpp"

namespace gradstl::testing {

// Signal of the worked Eventually example: one variable v.
inline Signal eventually_signal() {
  return Signal({0.0, 2.3, 3.9, 7.7, 9.1, 11.4}, {"v"},
                {1.6, 1.9, 12.0, 15.3, 14.2, 28.2});
}

// Three-variable example signal sampled at irregular times.
inline Signal three_var_signal() {
  return Signal({0.0, 0.4, 2.8, 5.0, 8.0, 9.4}, {"x", "y", "z"},
                {0.0, 0.0, 25.0, 0.1, 0.1, 20.6, 2.0, 2.4, 8.1,
                 18.4, 28.6, 8.2, 24.7, 26.1, 17.9, 26.9, 18.2, 17.0});
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  // Multiple of `step` in [lo, hi]; exact in binary when step is dyadic.
  double grid(double lo, double hi, double step) {
    const auto n = static_cast<long>(std::floor((hi - lo) / step));
    return lo + step * static_cast<double>(
                           std::uniform_int_distribution<long>(0, n)(engine_));
  }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

struct InstanceOptions {
  std::size_t max_samples = 8;
  std::size_t max_depth = 4;          // depth() of the formula, atoms count 1
  double time_step = 0.25;            // timestamps and windows on this grid
  double max_gap = 2.0;
  double max_window = 4.0;
  bool grid_values = true;            // dyadic values (exact ties) vs continuous
  bool allow_until = true;
};

inline Signal random_signal(Rng& rng, const InstanceOptions& opt) {
  const std::size_t n = rng.index(1, opt.max_samples);
  std::vector<double> times;
  double t = rng.grid(0.0, 2.0, opt.time_step);
  for (std::size_t k = 0; k < n; ++k) {
    times.push_back(t);
    t += rng.grid(opt.time_step, opt.max_gap, opt.time_step);
  }
  std::vector<double> values;
  for (std::size_t j = 0; j < 2 * n; ++j) {
    values.push_back(opt.grid_values ? rng.grid(-2.0, 2.0, 0.125)
                                     : rng.uniform(-2.0, 2.0));
  }
  return Signal(times, {"x", "y"}, values);
}

// Smooth atom functions of (x, y).
inline Expr random_atom_expr(Rng& rng) {
  const Expr x = var(0, "x");
  const Expr y = var(1, "y");
  switch (rng.index(0, 7)) {
    case 0: return x;
    case 1: return y;
    case 2: return -x;
    case 3: return x - y;
    case 4: return x + constant(0.5) * y;
    case 5: return pow(x, 2) - y;
    case 6: return x * y;
    default: return constant(1.0) - pow(x - constant(0.5), 2) - pow(y, 2);
  }
}

inline Window random_window(Rng& rng, const InstanceOptions& opt) {
  double a = rng.grid(0.0, opt.max_window, opt.time_step);
  double b = rng.grid(0.0, opt.max_window, opt.time_step);
  if (a > b) std::swap(a, b);
  return {a, b};
}

inline Formula random_formula(Rng& rng, const InstanceOptions& opt, std::size_t depth) {
  if (depth <= 1 || rng.coin(0.2)) {
    const double c = opt.grid_values ? rng.grid(-1.0, 1.0, 0.25) : rng.uniform(-1.0, 1.0);
    return atom(random_atom_expr(rng), c);
  }
  const std::size_t kinds = opt.allow_until ? 6 : 5;
  switch (rng.index(0, kinds - 1)) {
    case 0:
      return negate(random_formula(rng, opt, depth - 1));
    case 1:
      return conjoin(random_formula(rng, opt, depth - 1),
                     random_formula(rng, opt, depth - 1));
    case 2:
      return always(random_window(rng, opt), random_formula(rng, opt, depth - 1));
    case 3:
      return eventually(random_window(rng, opt), random_formula(rng, opt, depth - 1));
    case 4:
      return derived_or(random_formula(rng, opt, depth - 1),
                        random_formula(rng, opt, depth - 1));
    default:
      return until(random_window(rng, opt), random_formula(rng, opt, depth - 1),
                   random_formula(rng, opt, depth - 1));
  }
}

struct Instance {
  Signal signal;
  Formula formula;
  std::size_t position;
};

// True when every min/max the set-based robustness ranges over is nonempty.
inline bool windows_nonempty(const Instance& in) {
  try {
    robustness_oracle(in.signal, in.formula, in.position);
    return true;
  } catch (const EmptyWindow&) {
    return false;
  }
}

// Random (signal, formula, position) triple with all windows nonempty.
inline Instance random_instance(Rng& rng, const InstanceOptions& opt = {}) {
  while (true) {
    Signal s = random_signal(rng, opt);
    Formula f = random_formula(rng, opt, opt.max_depth);
    const std::size_t n = rng.index(0, s.size() - 1);
    Instance in{std::move(s), std::move(f), n};
    if (windows_nonempty(in)) return in;
  }
}

inline std::vector<Instance> instance_suite(std::uint64_t seed, std::size_t count,
                                            const InstanceOptions& opt = {}) {
  Rng rng(seed);
  std::vector<Instance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_instance(rng, opt));
  return out;
}

// Central difference of R* in entry (k, var).
inline double central_difference(Gamma gamma, const Instance& in, std::size_t var,
                                  std::size_t k, double h) {
  std::vector<double> plus = in.signal.values();
  std::vector<double> minus = plus;
  plus[k * in.signal.width() + var] += h;
  minus[k * in.signal.width() + var] -= h;
  const double up = rstar(gamma, in.signal.with_values(plus), in.formula, in.position);
  const double down = rstar(gamma, in.signal.with_values(minus), in.formula, in.position);
  return (up - down) / (2.0 * h);
}

// Most soft min/max operations on one path from the root of R*'s
// evaluation to a leaf. Each contributes at most gamma * ln 2 of deviation
// from the gamma = 0 value.
inline std::size_t smooth_nesting(const Signal& s, const Formula& f, std::size_t n) {
  struct Algebra {
    using Value = std::size_t;
    Value atom(const FormulaNode&, std::size_t) const { return 0; }
    Value negate(Value v) const { return v; }
    Value conj(Value a, Value b) const { return std::max(a, b) + 1; }
    Value disj(Value a, Value b) const { return std::max(a, b) + 1; }
    Value lo_reached(double) const { return 0; }
    Value lo_pending(double) const { return 0; }
  };
  Algebra algebra;
  Recursion<Algebra> rec(algebra, s);
  return rec(f, n);
}

}  // namespace gradstl::testing
