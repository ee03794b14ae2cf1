#pragma once

// Medical-robot navigation scenario: reach a cabinet, dwell, reach the
// bedside, dwell, return to the dock, while avoiding furniture and keeping
// under a speed limit. Builds the constraint and the initial straight-line
// trajectory, then optimizes the trajectory with Adam.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gradstl/detail/number.hpp"
#include "gradstl/error.hpp"
#include "gradstl/expr.hpp"
#include "gradstl/formula.hpp"
#include "gradstl/log.hpp"
#include "gradstl/optimize.hpp"
#include "gradstl/robustness.hpp"
#include "gradstl/semantics.hpp"
#include "gradstl/signal.hpp"

namespace gradstl::casestudy {

// Signal columns of the case study.
inline constexpr std::size_t kX = 0;
inline constexpr std::size_t kY = 1;
inline constexpr std::size_t kV = 2;

inline std::vector<std::string> column_names() { return {"x", "y", "v"}; }

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

// Axis-aligned rectangle or circle, in meters.
struct Region {
  enum class Kind { Rectangle, Circle };

  std::string name;
  Kind kind = Kind::Rectangle;
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
  double cx = 0.0, cy = 0.0, radius = 0.0;

  static Region rectangle(std::string name, double xmin, double xmax, double ymin,
                          double ymax) {
    Region r;
    r.name = std::move(name);
    r.kind = Kind::Rectangle;
    r.xmin = xmin;
    r.xmax = xmax;
    r.ymin = ymin;
    r.ymax = ymax;
    r.validate();
    return r;
  }

  static Region circle(std::string name, double cx, double cy, double radius) {
    Region r;
    r.name = std::move(name);
    r.kind = Kind::Circle;
    r.cx = cx;
    r.cy = cy;
    r.radius = radius;
    r.validate();
    return r;
  }

  void validate() const {
    if (kind == Kind::Rectangle) {
      if (!(xmin < xmax) || !(ymin < ymax)) {
        throw ValidationError("region '" + name + "' needs xmin < xmax and ymin < ymax");
      }
    } else if (!(radius > 0.0)) {
      throw ValidationError("region '" + name + "' needs radius > 0");
    }
  }

  // Strict interior, matching the strict atoms of region_formula.
  bool contains(Point p) const {
    if (kind == Kind::Rectangle) {
      return p.x > xmin && p.x < xmax && p.y > ymin && p.y < ymax;
    }
    const double dx = p.x - cx;
    const double dy = p.y - cy;
    return radius * radius - (dx * dx + dy * dy) > 0.0;
  }

  friend bool operator==(const Region&, const Region&) = default;
};

// Rectangle: x - xmin > 0 & xmax - x > 0 & y - ymin > 0 & ymax - y > 0.
// Circle: r^2 - ((x - cx)^2 + (y - cy)^2) > 0. Outside is the negation.
inline Formula region_formula(const Region& r, bool inside) {
  const Expr x = var(kX, "x");
  const Expr y = var(kY, "y");
  Formula f = [&] {
    if (r.kind == Region::Kind::Rectangle) {
      return conjoin(conjoin(conjoin(atom(x - constant(r.xmin), 0.0),
                                     atom(constant(r.xmax) - x, 0.0)),
                             atom(y - constant(r.ymin), 0.0)),
                     atom(constant(r.ymax) - y, 0.0));
    }
    return atom(constant(r.radius * r.radius) -
                    (pow(x - constant(r.cx), 2) + pow(y - constant(r.cy), 2)),
                0.0);
  }();
  return inside ? f : negate(f);
}

enum class SpeedMode { Derived, Free };

struct Scenario {
  // Obstacles.
  Region desk = Region::rectangle("desk", 8.0, 9.8, 3.0, 4.5);
  Region chair = Region::rectangle("chair", 1.2, 2.4, 3.0, 3.8);
  Region bed = Region::rectangle("bed", 3.5, 7.0, 4.5, 7.5);
  // Task regions.
  Region access = Region::circle("access", 8.5, 1.5, 0.5);
  Region bedside = Region::circle("bedside", 2.7, 6.0, 0.5);
  Region dock = Region::circle("dock", 1.0, 1.0, 0.5);
  // Path: dock -> cabinet -> bedside -> dock.
  Point dock_point{1.0, 1.0};
  Point cabinet_point{8.5, 1.5};
  Point bedside_point{2.7, 6.0};

  double horizon = 50.0;       // s
  double dwell = 5.0;          // s
  double speed_limit = 1.5;    // m/s
  std::size_t sample_count = 50;
  std::size_t dense_segment = 1;     // 0: dock->cabinet, 1: cabinet->bedside, 2: bedside->dock
  double dense_multiplier = 3.0;     // sampling density on the dense segment
  SpeedMode speed_mode = SpeedMode::Derived;
  OptimizerConfig optimizer = default_optimizer();

  static OptimizerConfig default_optimizer() {
    OptimizerConfig cfg;
    cfg.steps = 500;
    cfg.learning_rate = 0.05;
    cfg.gamma = Gamma(0.05);
    return cfg;
  }

  std::array<Point, 4> waypoints() const {
    return {dock_point, cabinet_point, bedside_point, dock_point};
  }

  void validate() const {
    for (const Region* r : {&desk, &chair, &bed, &access, &bedside, &dock}) {
      r->validate();
    }
    if (!(horizon > 0.0)) throw ValidationError("horizon must be > 0");
    if (!(dwell > 0.0)) throw ValidationError("dwell must be > 0");
    if (!(speed_limit > 0.0)) throw ValidationError("speed limit must be > 0");
    if (sample_count < 2) throw ValidationError("sample count must be >= 2");
    if (dense_segment > 2) throw ValidationError("dense segment must be 0, 1 or 2");
    if (!(dense_multiplier > 0.0)) {
      throw ValidationError("dense multiplier must be > 0");
    }
    const std::pair<Point, const Region*> tasks[] = {
        {dock_point, &dock}, {cabinet_point, &access}, {bedside_point, &bedside}};
    for (const auto& [p, region] : tasks) {
      if (!region->contains(p)) {
        throw ValidationError("waypoint is outside its task region '" +
                              region->name + "'");
      }
      for (const Region* obstacle : {&desk, &chair, &bed}) {
        if (obstacle->contains(p)) {
          throw ValidationError("waypoint for '" + region->name +
                                "' lies inside obstacle '" + obstacle->name + "'");
        }
      }
    }
  }
};

inline Scenario default_scenario() { return Scenario{}; }

// Four Always clauses (speed, desk, chair, bed) and the nested
// cabinet -> bedside -> dock sequence, conjoined left to right.
inline Formula build_constraint(const Scenario& sc) {
  const Window whole{0.0, sc.horizon};
  const Window stay{0.0, sc.dwell};
  const Formula speed =
      always(whole, atom(-var(kV, "v"), -sc.speed_limit));
  const Formula no_desk = always(whole, region_formula(sc.desk, false));
  const Formula no_chair = always(whole, region_formula(sc.chair, false));
  const Formula no_bed = always(whole, region_formula(sc.bed, false));

  const Formula home = eventually(whole, always(whole, region_formula(sc.dock, true)));
  const Formula visit_bedside =
      eventually(whole, conjoin(always(stay, region_formula(sc.bedside, true)), home));
  const Formula sequence =
      eventually(whole, conjoin(always(stay, region_formula(sc.access, true)),
                                visit_bedside));
  return conjoin(conjoin(conjoin(conjoin(speed, no_desk), no_chair), no_bed), sequence);
}

// v_k = |p_{k+1} - p_k| / dt_k for k < n - 1, v_{n-1} = v_{n-2}.
inline Signal with_derived_speed(const Signal& s) {
  std::vector<double> vals = s.values();
  const std::size_t w = s.width();
  const std::size_t n = s.size();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double dx = vals[(k + 1) * w + kX] - vals[k * w + kX];
    const double dy = vals[(k + 1) * w + kY] - vals[k * w + kY];
    vals[k * w + kV] = std::hypot(dx, dy) / delta_t(s, k);
  }
  if (n >= 2) {
    vals[(n - 1) * w + kV] = vals[(n - 2) * w + kV];
  } else {
    vals[kV] = 0.0;
  }
  return s.with_values(std::move(vals));
}

// Moves gradient on the v column onto the x, y entries v is computed from,
// then clears the v column.
inline void pull_back_speed(const Signal& s, GradientTensor& grad) {
  const std::size_t n = s.size();
  if (n >= 2) {
    grad.at(n - 2, kV) += grad.at(n - 1, kV);
    grad.at(n - 1, kV) = 0.0;
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double g = grad.at(k, kV);
    grad.at(k, kV) = 0.0;
    if (g == 0.0) continue;
    const double dx = s.at(k + 1, kX) - s.at(k, kX);
    const double dy = s.at(k + 1, kY) - s.at(k, kY);
    const double dist = std::hypot(dx, dy);
    if (dist == 0.0) continue;  // subgradient 0 at a standstill
    const double scale = g / (dist * delta_t(s, k));
    grad.at(k + 1, kX) += scale * dx;
    grad.at(k + 1, kY) += scale * dy;
    grad.at(k, kX) -= scale * dx;
    grad.at(k, kY) -= scale * dy;
  }
  if (n == 1) grad.at(0, kV) = 0.0;
}

inline SignalCoupling speed_coupling(SpeedMode mode) {
  if (mode == SpeedMode::Free) return {};
  return {with_derived_speed, pull_back_speed};
}

// Sample times: uniform in a warped clock that runs `dense_multiplier`
// times faster on the dense segment. First sample at 0, last at the horizon.
inline std::vector<double> sample_times(const Scenario& sc) {
  const auto wp = sc.waypoints();
  std::array<double, 3> length{};
  double total = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    length[i] = std::hypot(wp[i + 1].x - wp[i].x, wp[i + 1].y - wp[i].y);
    total += length[i];
  }
  if (!(total > 0.0)) throw ValidationError("waypoints do not span a path");

  std::array<double, 3> duration{};
  std::array<double, 3> density{};
  double warped_total = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    duration[i] = sc.horizon * length[i] / total;
    density[i] = i == sc.dense_segment ? sc.dense_multiplier : 1.0;
    warped_total += duration[i] * density[i];
  }

  const std::size_t count = sc.sample_count;
  std::vector<double> times(count);
  for (std::size_t k = 0; k < count; ++k) {
    double u = warped_total * static_cast<double>(k) / static_cast<double>(count - 1);
    double t = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double span = duration[i] * density[i];
      if (u <= span || i == 2) {
        t += std::min(u / density[i], duration[i]);
        break;
      }
      u -= span;
      t += duration[i];
    }
    times[k] = std::min(t, sc.horizon);
  }
  times.front() = 0.0;
  times.back() = sc.horizon;
  return times;
}

// Straight lines between waypoints at uniform speed over the horizon.
inline Point path_position(const Scenario& sc, double t) {
  const auto wp = sc.waypoints();
  std::array<double, 3> length{};
  double total = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    length[i] = std::hypot(wp[i + 1].x - wp[i].x, wp[i + 1].y - wp[i].y);
    total += length[i];
  }
  double arc = total * std::clamp(t / sc.horizon, 0.0, 1.0);
  for (std::size_t i = 0; i < 3; ++i) {
    if (arc <= length[i] || i == 2) {
      const double frac = length[i] > 0.0 ? std::min(arc / length[i], 1.0) : 0.0;
      return {wp[i].x + frac * (wp[i + 1].x - wp[i].x),
              wp[i].y + frac * (wp[i + 1].y - wp[i].y)};
    }
    arc -= length[i];
  }
  return wp.back();
}

inline Signal initial_trajectory(const Scenario& sc) {
  sc.validate();
  const std::vector<double> times = sample_times(sc);
  std::vector<double> vals(times.size() * 3, 0.0);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Point p = k == 0 ? sc.dock_point : path_position(sc, times[k]);
    vals[k * 3 + kX] = p.x;
    vals[k * 3 + kY] = p.y;
  }
  return with_derived_speed(Signal(times, column_names(), std::move(vals)));
}

// Sample 0's position is pinned; in derived mode the v column is as well,
// since it is recomputed from x, y after every step.
inline std::vector<bool> pin_mask(const Scenario& sc) {
  std::vector<bool> mask(sc.sample_count * 3, false);
  mask[kX] = true;
  mask[kY] = true;
  if (sc.speed_mode == SpeedMode::Derived) {
    for (std::size_t k = 0; k < sc.sample_count; ++k) mask[k * 3 + kV] = true;
  }
  return mask;
}

struct CaseStudyReport {
  double initial_robustness = 0.0;
  double final_robustness = 0.0;
  bool satisfied = false;
  std::size_t steps_run = 0;
  double gamma = 0.0;
  double wall_time_seconds = 0.0;
  double initial_smooth_robustness = 0.0;
  double final_smooth_robustness = 0.0;
};

inline nlohmann::json to_json(const CaseStudyReport& r) {
  return nlohmann::json{{"initial_robustness", r.initial_robustness},
                        {"final_robustness", r.final_robustness},
                        {"satisfied", r.satisfied},
                        {"steps_run", r.steps_run},
                        {"gamma", r.gamma},
                        {"wall_time_seconds", r.wall_time_seconds},
                        {"initial_smooth_robustness", r.initial_smooth_robustness},
                        {"final_smooth_robustness", r.final_smooth_robustness}};
}

struct CaseStudyResult {
  CaseStudyReport report;
  Formula constraint;
  Signal initial;
  OptimizationTrace trace;
};

// Runs the scenario in memory.
inline CaseStudyResult solve_case_study(const Scenario& sc) {
  const auto start = std::chrono::steady_clock::now();
  sc.validate();
  const Formula constraint = build_constraint(sc);
  const Signal initial = initial_trajectory(sc);
  OptimizerConfig cfg = sc.optimizer;
  cfg.pin_mask = pin_mask(sc);
  cfg.position = 0;
  log::info("case study: " + std::to_string(initial.size()) + " samples, " +
            std::to_string(cfg.steps) + " steps, gamma " + to_string(cfg.gamma));
  OptimizationTrace trace =
      optimize_signal(initial, constraint, cfg, speed_coupling(sc.speed_mode));

  CaseStudyReport report;
  report.initial_robustness = trace.records.front().hard_robustness;
  report.initial_smooth_robustness = trace.records.front().smooth_robustness;
  report.final_robustness = trace.final_hard_robustness;
  report.final_smooth_robustness = trace.final_smooth_robustness;
  report.satisfied = eval_estar(trace.final_signal, constraint, 0).value;
  report.steps_run = trace.records.size();
  report.gamma = cfg.gamma.value();
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log::info("case study: robustness " + detail::format_significant(report.initial_robustness, 6) +
            " -> " + detail::format_significant(report.final_robustness, 6) +
            (report.satisfied ? " (satisfied)" : " (not satisfied)"));
  return {report, constraint, initial, std::move(trace)};
}

// Writes initial.csv, final.csv, trace.csv and report.json into `out_dir`.
inline CaseStudyReport run_case_study(const Scenario& sc,
                                      const std::filesystem::path& out_dir) {
  CaseStudyResult result = solve_case_study(sc);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  save_signal(result.initial, out_dir / "initial.csv");
  save_signal(result.trace.final_signal, out_dir / "final.csv");
  save_trace(result.trace, out_dir / "trace.csv");
  std::ofstream report(out_dir / "report.json");
  if (!report) throw IoError("cannot write report.json");
  report << to_json(result.report).dump(2) << '\n';
  return result.report;
}

// ---- scenario config ------------------------------------------------------
//
// INI-style text: `[section]` headers, `key = value` lines, `#` comments.
//   [regions]    name = rect xmin xmax ymin ymax | circle cx cy radius
//                (names: desk chair bed access bedside dock; meters)
//   [waypoints]  dock | cabinet | bedside = x y   (meters)
//   [timing]     horizon, dwell (s); speed_limit (m/s); samples;
//                dense_segment (0..2); dense_multiplier
//   [optimizer]  steps, learning_rate, beta1, beta2, epsilon, gamma,
//                gamma_schedule (constant|linear), gamma_floor, seed,
//                speed_mode (derived|free)
// Keys that are not given keep their default values.

namespace detail {

inline std::vector<double> numbers(const std::string& key, std::string_view text,
                                   std::size_t expected) {
  std::vector<double> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    const auto v = gradstl::detail::parse_double(tok);
    if (!v || !std::isfinite(*v)) throw ConfigError(key, "malformed number '" + tok + "'");
    out.push_back(*v);
  }
  if (out.size() != expected) {
    throw ConfigError(key, "expected " + std::to_string(expected) + " numbers");
  }
  return out;
}

inline double number(const std::string& key, std::string_view text) {
  return numbers(key, text, 1)[0];
}

inline std::size_t count(const std::string& key, std::string_view text) {
  const auto v = gradstl::detail::parse_integer(text);
  if (!v || *v < 0) throw ConfigError(key, "expected a nonnegative integer");
  return static_cast<std::size_t>(*v);
}

inline Region region(const std::string& key, const std::string& name,
                     std::string_view text) {
  text = gradstl::detail::trim(text);
  const std::size_t space = text.find_first_of(" \t");
  const std::string_view shape = text.substr(0, space);
  const std::string_view rest =
      space == std::string_view::npos ? std::string_view{} : text.substr(space);
  try {
    if (shape == "rect") {
      const auto v = numbers(key, rest, 4);
      return Region::rectangle(name, v[0], v[1], v[2], v[3]);
    }
    if (shape == "circle") {
      const auto v = numbers(key, rest, 3);
      return Region::circle(name, v[0], v[1], v[2]);
    }
  } catch (const ValidationError& e) {
    throw ConfigError(key, e.what());
  }
  throw ConfigError(key, "expected 'rect' or 'circle'");
}

}  // namespace detail

inline Scenario parse_scenario(std::istream& in) {
  Scenario sc = default_scenario();
  std::string section;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = gradstl::detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(std::string(line), "unterminated section header on line " +
                                                 std::to_string(line_no));
      }
      section = std::string(gradstl::detail::trim(line.substr(1, line.size() - 2)));
      if (section != "regions" && section != "waypoints" && section != "timing" &&
          section != "optimizer") {
        throw ConfigError(section, "unknown section");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(line), "expected 'key = value' on line " +
                                               std::to_string(line_no));
    }
    const std::string name(gradstl::detail::trim(line.substr(0, eq)));
    const std::string_view value = gradstl::detail::trim(line.substr(eq + 1));
    const std::string key = section.empty() ? name : section + "." + name;
    if (section.empty()) throw ConfigError(key, "key outside of any section");

    if (section == "regions") {
      Region* target = name == "desk"      ? &sc.desk
                       : name == "chair"   ? &sc.chair
                       : name == "bed"     ? &sc.bed
                       : name == "access"  ? &sc.access
                       : name == "bedside" ? &sc.bedside
                       : name == "dock"    ? &sc.dock
                                           : nullptr;
      if (target == nullptr) throw ConfigError(key, "unknown region");
      *target = detail::region(key, name, value);
    } else if (section == "waypoints") {
      Point* target = name == "dock"      ? &sc.dock_point
                      : name == "cabinet" ? &sc.cabinet_point
                      : name == "bedside" ? &sc.bedside_point
                                          : nullptr;
      if (target == nullptr) throw ConfigError(key, "unknown waypoint");
      const auto v = detail::numbers(key, value, 2);
      *target = {v[0], v[1]};
    } else if (section == "timing") {
      if (name == "horizon") sc.horizon = detail::number(key, value);
      else if (name == "dwell") sc.dwell = detail::number(key, value);
      else if (name == "speed_limit") sc.speed_limit = detail::number(key, value);
      else if (name == "samples") sc.sample_count = detail::count(key, value);
      else if (name == "dense_segment") sc.dense_segment = detail::count(key, value);
      else if (name == "dense_multiplier") sc.dense_multiplier = detail::number(key, value);
      else throw ConfigError(key, "unknown key");
    } else {
      OptimizerConfig& o = sc.optimizer;
      if (name == "steps") o.steps = detail::count(key, value);
      else if (name == "learning_rate") o.learning_rate = detail::number(key, value);
      else if (name == "beta1") o.beta1 = detail::number(key, value);
      else if (name == "beta2") o.beta2 = detail::number(key, value);
      else if (name == "epsilon") o.epsilon = detail::number(key, value);
      else if (name == "gamma") o.gamma = Gamma(detail::number(key, value));
      else if (name == "gamma_floor") o.gamma_floor = detail::number(key, value);
      else if (name == "seed") o.seed = detail::count(key, value);
      else if (name == "gamma_schedule") {
        if (value == "constant") o.schedule = GammaSchedule::Constant;
        else if (value == "linear") o.schedule = GammaSchedule::Linear;
        else throw ConfigError(key, "expected 'constant' or 'linear'");
      } else if (name == "speed_mode") {
        if (value == "derived") sc.speed_mode = SpeedMode::Derived;
        else if (value == "free") sc.speed_mode = SpeedMode::Free;
        else throw ConfigError(key, "expected 'derived' or 'free'");
      } else {
        throw ConfigError(key, "unknown key");
      }
    }
  }
  const OptimizerConfig& o = sc.optimizer;
  if (o.steps < 1) throw ConfigError("optimizer.steps", "must be >= 1");
  if (!(o.learning_rate > 0.0)) throw ConfigError("optimizer.learning_rate", "must be > 0");
  if (!(o.beta1 >= 0.0 && o.beta1 < 1.0)) throw ConfigError("optimizer.beta1", "must lie in [0, 1)");
  if (!(o.beta2 >= 0.0 && o.beta2 < 1.0)) throw ConfigError("optimizer.beta2", "must lie in [0, 1)");
  if (!(o.epsilon > 0.0)) throw ConfigError("optimizer.epsilon", "must be > 0");
  if (!o.gamma.smooth()) throw ConfigError("optimizer.gamma", "must be > 0");
  if (!(o.gamma_floor > 0.0)) throw ConfigError("optimizer.gamma_floor", "must be > 0");
  sc.validate();
  return sc;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  return parse_scenario(in);
}

}  // namespace gradstl::casestudy
