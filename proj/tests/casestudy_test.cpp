#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

namespace gradstl::casestudy {
namespace {

Signal one_sample(double x, double y) { return Signal({0.0}, column_names(), {x, y, 0.0}); }

TEST(Region, UnitSquare) {
  const Region sq = Region::rectangle("sq", 0, 1, 0, 1);
  EXPECT_TRUE(satisfies(one_sample(0.5, 0.5), region_formula(sq, true)));
  EXPECT_FALSE(satisfies(one_sample(2, 0), region_formula(sq, true)));
  EXPECT_TRUE(satisfies(one_sample(2, 0), region_formula(sq, false)));
  EXPECT_EQ(size(region_formula(sq, true)), 7u);
  EXPECT_EQ(size(region_formula(sq, false)), 8u);
}

TEST(Region, CircleRobustness) {
  const Region c = Region::circle("c", 1, 1, 1);
  // 1 - (0.6^2 + 0) at (1.6, 1)
  EXPECT_NEAR(hard_robustness(one_sample(1.6, 1), region_formula(c, true)), 0.64, 1e-12);
  EXPECT_TRUE(c.contains({1.6, 1}));
  EXPECT_FALSE(c.contains({2, 1}));
  EXPECT_THROW(Region::circle("bad", 0, 0, 0), ValidationError);
  EXPECT_THROW(Region::rectangle("bad", 1, 0, 0, 1), ValidationError);
}

TEST(Constraint, Structure) {
  const Formula f = build_constraint(default_scenario());
  const std::vector<Formula> parts = conjuncts(f);
  ASSERT_EQ(parts.size(), 5u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(parts[i].kind(), FormulaKind::Always);
    EXPECT_EQ(temporal_depth(parts[i]), 1u);
  }
  EXPECT_EQ(temporal_depth(parts[4]), 4u);
  EXPECT_EQ(temporal_count(parts[4]), 6u);
  EXPECT_EQ(temporal_depth(f), 4u);
  EXPECT_EQ(size(f), 44u);
  EXPECT_EQ(parse_formula(print_formula(f), column_names()), f);
}

TEST(Constraint, DockOnlySignalFails) {
  const Scenario sc = default_scenario();
  const Signal s({0, 10, 20, 30, 40}, column_names(),
                 {1, 1, 0, 1.1, 1, 0, 1, 0.9, 0, 1, 1, 0, 0.9, 1, 0});
  const Formula f = build_constraint(sc);
  EXPECT_FALSE(satisfies(s, f));
  EXPECT_FALSE(eval_oracle(s, f, 0));
  EXPECT_LT(hard_robustness(s, f), 0.0);
  // every clause except the visit sequence holds
  const auto parts = conjuncts(f);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(satisfies(s, parts[i]));
}

TEST(Constraint, SpeedViolationFails) {
  const Scenario sc = default_scenario();
  Signal s = initial_trajectory(sc);
  const auto parts = conjuncts(build_constraint(sc));
  testing::Rng rng(81);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> vals = s.values();
    for (std::size_t k = 0; k < s.size(); ++k) vals[k * 3 + kV] = rng.uniform(0, 1.4);
    vals[rng.index(0, s.size() - 1) * 3 + kV] = 1.6;
    const Signal t = s.with_values(vals);
    EXPECT_FALSE(satisfies(t, parts[0]));
    EXPECT_FALSE(eval_oracle(t, parts[0], 0));
    EXPECT_FALSE(satisfies(t, build_constraint(sc)));
  }
}

TEST(Trajectory, SampleTimes) {
  const Scenario sc = default_scenario();
  const std::vector<double> t = sample_times(sc);
  ASSERT_EQ(t.size(), 50u);
  EXPECT_EQ(t.front(), 0.0);
  EXPECT_LE(t.back(), 50.0);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) EXPECT_LT(t[k], t[k + 1]);
}

TEST(Trajectory, DenseSegmentGetsItsShare) {
  const Scenario sc = default_scenario();
  const auto wp = sc.waypoints();
  double len[3], total = 0;
  for (int i = 0; i < 3; ++i) {
    len[i] = std::hypot(wp[i + 1].x - wp[i].x, wp[i + 1].y - wp[i].y);
    total += len[i];
  }
  const double start = sc.horizon * len[0] / total;
  const double end = sc.horizon * (len[0] + len[1]) / total;
  const double warped = len[0] + sc.dense_multiplier * len[1] + len[2];
  const double share = sc.dense_multiplier * len[1] / warped;
  std::size_t inside = 0;
  for (double t : sample_times(sc)) inside += (t >= start && t <= end);
  EXPECT_GE(static_cast<double>(inside), std::floor(share * (sc.sample_count - 1)));
  // and strictly more than uniform sampling would give
  EXPECT_GT(static_cast<double>(inside), sc.sample_count * len[1] / total + 1);
}

TEST(Trajectory, UniformMultiplierGivesEqualGaps) {
  Scenario sc = default_scenario();
  sc.dense_multiplier = 1.0;
  const std::vector<double> t = sample_times(sc);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    EXPECT_NEAR(t[k + 1] - t[k], sc.horizon / 49.0, 1e-9);
  }
}

TEST(Trajectory, InitialPathStartsAtDockAndViolates) {
  const Scenario sc = default_scenario();
  const Signal s = initial_trajectory(sc);
  EXPECT_EQ(s.at(0, kX), 1.0);
  EXPECT_EQ(s.at(0, kY), 1.0);
  EXPECT_LT(hard_robustness(s, build_constraint(sc)), 0.0);
  EXPECT_FALSE(satisfies(s, build_constraint(sc)));
}

void expect_speed_consistent(const Signal& s) {
  const std::size_t n = s.size();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double d = std::hypot(s.at(k + 1, kX) - s.at(k, kX), s.at(k + 1, kY) - s.at(k, kY));
    EXPECT_NEAR(s.at(k, kV), d / (s.time(k + 1) - s.time(k)), 1e-9);
  }
  EXPECT_NEAR(s.at(n - 1, kV), s.at(n - 2, kV), 1e-9);
}

TEST(Speed, PullbackMatchesFiniteDifference) {
  // g(x, y) = sum_k w_k v_k(x, y); the pulled-back gradient is dg/d(x, y).
  testing::Rng rng(82);
  const Signal base({0, 0.5, 1.5, 2.0, 3.5}, column_names(),
                    {0, 0, 0, 1, 0.5, 0, 1.5, 1.2, 0, 2, 2, 0, 2.5, 1, 0});
  std::vector<double> w(5);
  for (double& wk : w) wk = rng.uniform(-1, 1);
  auto objective = [&](const Signal& s) {
    const Signal d = with_derived_speed(s);
    double sum = 0;
    for (std::size_t k = 0; k < 5; ++k) sum += w[k] * d.at(k, kV);
    return sum;
  };
  GradientTensor g(5, 3);
  for (std::size_t k = 0; k < 5; ++k) g.at(k, kV) = w[k];
  pull_back_speed(with_derived_speed(base), g);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(g.at(k, kV), 0.0);
    for (std::size_t i : {kX, kY}) {
      std::vector<double> up = base.values(), down = base.values();
      up[k * 3 + i] += 1e-6;
      down[k * 3 + i] -= 1e-6;
      const double fd = (objective(base.with_values(up)) - objective(base.with_values(down))) / 2e-6;
      EXPECT_NEAR(g.at(k, i), fd, 1e-6);
    }
  }
}

TEST(CaseStudy, DefaultScenarioIsSolved) {
  const Scenario sc = default_scenario();
  const CaseStudyResult r = solve_case_study(sc);
  EXPECT_LT(r.report.initial_robustness, 0.0);
  EXPECT_GT(r.report.final_robustness, 0.0);
  EXPECT_TRUE(r.report.satisfied);
  EXPECT_EQ(r.report.satisfied, satisfies(r.trace.final_signal, r.constraint));
  EXPECT_GT(r.report.final_smooth_robustness, r.report.initial_smooth_robustness);
  EXPECT_EQ(r.report.steps_run, 500u);
  expect_speed_consistent(r.initial);
  expect_speed_consistent(r.trace.final_signal);
  EXPECT_EQ(r.trace.final_signal.at(0, kX), sc.dock_point.x);
  EXPECT_EQ(r.trace.final_signal.at(0, kY), sc.dock_point.y);
  EXPECT_EQ(r.trace.final_signal.times(), r.initial.times());
}

TEST(CaseStudy, SpeedConsistentAfterEveryStep) {
  // Short runs: the final signal of a k-step run is the state after step k.
  Scenario sc = default_scenario();
  for (std::size_t steps : {1u, 2u, 7u, 30u}) {
    sc.optimizer.steps = steps;
    expect_speed_consistent(solve_case_study(sc).trace.final_signal);
  }
}

TEST(CaseStudy, ObstacleFreeControl) {
  Scenario sc = default_scenario();
  sc.desk = Region::rectangle("desk", 20, 21, 20, 21);
  sc.chair = Region::rectangle("chair", 22, 23, 20, 21);
  sc.bed = Region::rectangle("bed", 24, 25, 20, 21);
  sc.dwell = 2.0;
  const CaseStudyResult r = solve_case_study(sc);
  EXPECT_GT(r.report.initial_robustness, -0.6);
  EXPECT_TRUE(r.report.satisfied);
  EXPECT_GT(r.report.final_robustness, 0.0);
}

TEST(CaseStudy, WritesOutputs) {
  Scenario sc = default_scenario();
  sc.optimizer.steps = 5;
  const auto dir = std::filesystem::temp_directory_path() / "gradstl_cs_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  const CaseStudyReport report = run_case_study(sc, dir);
  for (const char* name : {"initial.csv", "final.csv", "trace.csv", "report.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  std::ifstream in(dir / "report.json");
  const nlohmann::json j = nlohmann::json::parse(in);
  for (const char* key : {"initial_robustness", "final_robustness", "satisfied", "steps_run",
                          "gamma", "wall_time_seconds"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["steps_run"].get<std::size_t>(), 5u);
  EXPECT_EQ(j["satisfied"].get<bool>(), report.satisfied);
  EXPECT_EQ(load_signal(dir / "initial.csv"), initial_trajectory(sc));
}

Scenario parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

void expect_same(const Scenario& a, const Scenario& b) {
  EXPECT_EQ(a.desk, b.desk);
  EXPECT_EQ(a.chair, b.chair);
  EXPECT_EQ(a.bed, b.bed);
  EXPECT_EQ(a.access, b.access);
  EXPECT_EQ(a.bedside, b.bedside);
  EXPECT_EQ(a.dock, b.dock);
  EXPECT_EQ(a.waypoints(), b.waypoints());
  EXPECT_EQ(a.horizon, b.horizon);
  EXPECT_EQ(a.dwell, b.dwell);
  EXPECT_EQ(a.speed_limit, b.speed_limit);
  EXPECT_EQ(a.sample_count, b.sample_count);
  EXPECT_EQ(a.dense_segment, b.dense_segment);
  EXPECT_EQ(a.dense_multiplier, b.dense_multiplier);
  EXPECT_EQ(a.speed_mode, b.speed_mode);
  EXPECT_EQ(a.optimizer.steps, b.optimizer.steps);
  EXPECT_EQ(a.optimizer.learning_rate, b.optimizer.learning_rate);
  EXPECT_EQ(a.optimizer.beta1, b.optimizer.beta1);
  EXPECT_EQ(a.optimizer.beta2, b.optimizer.beta2);
  EXPECT_EQ(a.optimizer.epsilon, b.optimizer.epsilon);
  EXPECT_EQ(a.optimizer.gamma, b.optimizer.gamma);
  EXPECT_EQ(a.optimizer.schedule, b.optimizer.schedule);
  EXPECT_EQ(a.optimizer.gamma_floor, b.optimizer.gamma_floor);
  EXPECT_EQ(a.optimizer.seed, b.optimizer.seed);
}

TEST(Config, ShippedDefaultMatchesBuiltIn) {
  expect_same(load_scenario(std::filesystem::path(GRADSTL_SOURCE_DIR) / "scenarios" /
                            "default.cfg"),
              default_scenario());
  expect_same(parse(""), default_scenario());
}

TEST(Config, OverridesAndComments) {
  const Scenario sc = parse(
      "# comment\n[timing]\nhorizon = 60   # s\nsamples = 40\n"
      "[optimizer]\ngamma_schedule = linear\ngamma = 0.5\nspeed_mode = free\n"
      "[regions]\ndesk = rect 8 9.5 3 4\n");
  EXPECT_EQ(sc.horizon, 60.0);
  EXPECT_EQ(sc.sample_count, 40u);
  EXPECT_EQ(sc.optimizer.schedule, GammaSchedule::Linear);
  EXPECT_EQ(sc.optimizer.gamma, Gamma(0.5));
  EXPECT_EQ(sc.speed_mode, SpeedMode::Free);
  EXPECT_EQ(sc.desk.xmax, 9.5);
}

TEST(Config, ErrorsNameTheKey) {
  const std::pair<std::string, std::string> cases[] = {
      {"[timing]\nhorizon = abc\n", "timing.horizon"},
      {"[timing]\nsamples = -3\n", "timing.samples"},
      {"[timing]\nbogus = 1\n", "timing.bogus"},
      {"[regions]\ndesk = triangle 1 2 3\n", "regions.desk"},
      {"[regions]\ndock = circle 1 1\n", "regions.dock"},
      {"[regions]\nbed = rect 7 3 4 5\n", "regions.bed"},
      {"[optimizer]\nsteps = 0\n", "optimizer.steps"},
      {"[optimizer]\ngamma = 0\n", "optimizer.gamma"},
      {"[optimizer]\nspeed_mode = fast\n", "optimizer.speed_mode"},
      {"[waypoints]\ncabinet = 1\n", "waypoints.cabinet"},
      {"[nowhere]\n", "nowhere"},
  };
  for (const auto& [text, key] : cases) {
    try {
      parse(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.key(), key);
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos);
    }
  }
  // a waypoint moved out of its task region is caught by scenario validation
  EXPECT_THROW(parse("[waypoints]\ncabinet = 5 5\n"), ValidationError);
}

}  // namespace
}  // namespace gradstl::casestudy
