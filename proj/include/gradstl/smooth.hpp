#pragma once

// Soft maximum / minimum of two values and their derivatives.
//
// For gamma > 0, max_g(a, b) = g * ln(exp(a/g) + exp(b/g)), evaluated as
// max(a, b) + g * log1p(exp(-|a - b| / g)) so finite inputs never overflow.
// For gamma <= 0 the hard max/min are used. min_g(a, b) = -max_g(-a, -b).

#include <algorithm>
#include <cmath>
#include <string>

#include "gradstl/detail/number.hpp"
#include "gradstl/error.hpp"

namespace gradstl {

class Gamma {
 public:
  constexpr Gamma() = default;
  explicit Gamma(double value) : value_(value) {
    if (!std::isfinite(value)) throw DomainError("gamma must be finite");
  }

  double value() const noexcept { return value_; }
  bool smooth() const noexcept { return value_ > 0.0; }

  friend bool operator==(const Gamma&, const Gamma&) = default;

 private:
  double value_ = 0.0;
};

inline double smooth_max(Gamma gamma, double a, double b) {
  if (!gamma.smooth()) return std::max(a, b);
  const double g = gamma.value();
  return std::max(a, b) + g * std::log1p(std::exp(-std::abs(a - b) / g));
}

inline double smooth_min(Gamma gamma, double a, double b) {
  if (!gamma.smooth()) return std::min(a, b);
  return -smooth_max(gamma, -a, -b);
}

// Weight of `a` in the soft maximum: exp(a/g) / (exp(a/g) + exp(b/g)).
inline double softmax_weight(Gamma gamma, double a, double b) {
  return 1.0 / (1.0 + std::exp((b - a) / gamma.value()));
}

// Derivative of smooth_max(a, b) given the derivatives da, db of its inputs.
// With gamma <= 0 the derivative of the larger input is taken; ties average.
inline double d_smooth_max(Gamma gamma, double a, double da, double b, double db) {
  if (!gamma.smooth()) {
    if (a > b) return da;
    if (b > a) return db;
    return 0.5 * (da + db);
  }
  return da * softmax_weight(gamma, a, b) + db * softmax_weight(gamma, b, a);
}

inline double d_smooth_min(Gamma gamma, double a, double da, double b, double db) {
  return -d_smooth_max(gamma, -a, -da, -b, -db);
}

inline std::string to_string(Gamma g) { return detail::format_shortest(g.value()); }

}  // namespace gradstl
