#pragma once

// Gradient ascent on smooth robustness with Adam.
//
// The signal's values are the free parameters; timestamps never move.
// Entries flagged in the pin mask are left untouched.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "gradstl/detail/number.hpp"
#include "gradstl/error.hpp"
#include "gradstl/formula.hpp"
#include "gradstl/robustness.hpp"
#include "gradstl/signal.hpp"
#include "gradstl/smooth.hpp"

namespace gradstl {

enum class GammaSchedule { Constant, Linear };

struct OptimizerConfig {
  std::size_t steps = 500;
  double learning_rate = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Gamma gamma{0.1};
  GammaSchedule schedule = GammaSchedule::Constant;
  // End value of the linear schedule.
  double gamma_floor = 0.1;
  // Row-major, one flag per signal entry; true freezes the entry. Empty
  // means nothing is pinned.
  std::vector<bool> pin_mask;
  // Recorded with the run; the Adam loop itself draws no random numbers.
  std::uint64_t seed = 0;
  // Sample at which the formula is judged.
  std::size_t position = 0;
};

inline void validate(const OptimizerConfig& cfg, const Signal& s) {
  if (cfg.steps < 1) throw ValidationError("optimizer steps must be >= 1");
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ValidationError("learning rate must be > 0");
  }
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) {
    throw ValidationError("beta1 must lie in [0, 1)");
  }
  if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) {
    throw ValidationError("beta2 must lie in [0, 1)");
  }
  if (!(cfg.epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
  if (!cfg.gamma.smooth()) throw NonPositiveGamma("optimizer gamma must be > 0");
  if (cfg.schedule == GammaSchedule::Linear &&
      !(cfg.gamma_floor > 0.0 && std::isfinite(cfg.gamma_floor))) {
    throw NonPositiveGamma("gamma floor must be > 0");
  }
  if (!cfg.pin_mask.empty() && cfg.pin_mask.size() != s.values().size()) {
    throw ValidationError("pin mask has " + std::to_string(cfg.pin_mask.size()) +
                          " entries, signal has " +
                          std::to_string(s.values().size()));
  }
  if (cfg.position >= s.size()) {
    throw IndexError("evaluation position outside the signal");
  }
}

inline Gamma gamma_schedule(std::size_t step, const OptimizerConfig& cfg) {
  if (step >= cfg.steps) {
    throw IndexError("step " + std::to_string(step) + " beyond schedule of " +
                     std::to_string(cfg.steps));
  }
  if (cfg.schedule == GammaSchedule::Constant || cfg.steps == 1) return cfg.gamma;
  const double frac = static_cast<double>(step) / static_cast<double>(cfg.steps - 1);
  return Gamma(cfg.gamma.value() + (cfg.gamma_floor - cfg.gamma.value()) * frac);
}

// Optional coupling between the optimized entries and derived columns.
// `apply` recomputes derived entries after an update; `pullback` folds the
// gradient on derived entries back onto the entries they are computed from.
struct SignalCoupling {
  std::function<Signal(const Signal&)> apply;
  std::function<void(const Signal&, GradientTensor&)> pullback;
};

struct TraceRecord {
  std::size_t step = 0;
  double gamma = 0.0;
  double smooth_robustness = 0.0;  // at this step's gamma
  double hard_robustness = 0.0;    // at gamma = 0
};

struct OptimizationTrace {
  // records[t] describes the signal before update t.
  std::vector<TraceRecord> records;
  Signal final_signal;
  double final_smooth_robustness = 0.0;
  double final_hard_robustness = 0.0;
};

inline OptimizationTrace optimize_signal(const Signal& initial, const Formula& f,
                                         const OptimizerConfig& cfg,
                                         const SignalCoupling& coupling = {}) {
  validate(cfg, initial);
  Signal current = coupling.apply ? coupling.apply(initial) : initial;
  const RobustnessGraph graph(current, f, cfg.position);

  std::vector<double> params = current.values();
  std::vector<double> m(params.size(), 0.0);
  std::vector<double> v(params.size(), 0.0);
  double beta1_t = 1.0;
  double beta2_t = 1.0;

  std::vector<TraceRecord> records;
  records.reserve(cfg.steps);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const Gamma gamma = gamma_schedule(step, cfg);
    auto [smooth, grad] = graph.value_and_gradient(gamma, current);
    records.push_back({step, gamma.value(), smooth, graph.value(Gamma(0.0), current)});
    if (coupling.pullback) coupling.pullback(current, grad);

    beta1_t *= cfg.beta1;
    beta2_t *= cfg.beta2;
    for (std::size_t j = 0; j < params.size(); ++j) {
      if (!cfg.pin_mask.empty() && cfg.pin_mask[j]) continue;
      const double g = grad.entries()[j];
      if (!std::isfinite(g)) {
        throw NonFiniteGradient("gradient entry " + std::to_string(j) +
                                    " is not finite",
                                step);
      }
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[j] / (1.0 - beta1_t);
      const double v_hat = v[j] / (1.0 - beta2_t);
      params[j] += cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
    current = current.with_values(params);
    if (coupling.apply) {
      current = coupling.apply(current);
      params = current.values();
    }
  }

  const Gamma last_gamma = gamma_schedule(cfg.steps - 1, cfg);
  const double final_smooth = graph.value(last_gamma, current);
  const double final_hard = graph.value(Gamma(0.0), current);
  return {std::move(records), std::move(current), final_smooth, final_hard};
}

inline void write_trace(std::ostream& out, const OptimizationTrace& trace) {
  out << "step,smooth_robustness,hard_robustness\n";
  for (const TraceRecord& r : trace.records) {
    out << r.step << ',' << detail::format_significant(r.smooth_robustness, 17)
        << ',' << detail::format_significant(r.hard_robustness, 17) << '\n';
  }
}

inline void save_trace(const OptimizationTrace& trace,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace file " + path.string());
  write_trace(out, trace);
}

}  // namespace gradstl
