#pragma once

// Command-line front end: check, robustness, grad, optimize, casestudy.
//
// Exit codes: 0 success (for `check`: satisfied), 1 `check` not satisfied,
// 2 any error. Results go to stdout, diagnostics to stderr.

#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gradstl/casestudy.hpp"
#include "gradstl/detail/number.hpp"
#include "gradstl/error.hpp"
#include "gradstl/formula.hpp"
#include "gradstl/log.hpp"
#include "gradstl/optimize.hpp"
#include "gradstl/parser.hpp"
#include "gradstl/robustness.hpp"
#include "gradstl/semantics.hpp"
#include "gradstl/signal.hpp"

namespace gradstl::cli {

inline constexpr int kOk = 0;
inline constexpr int kUnsatisfied = 1;
inline constexpr int kError = 2;

namespace detail {

// Error tagged with the pipeline stage that produced it.
struct StageError {
  std::string stage;
  std::string message;
};

template <class F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw StageError{name, e.what()};
  }
}

inline Signal read_signal_arg(const std::string& path) {
  return stage("validate", [&] {
    try {
      return load_signal(path);
    } catch (const ParseError& e) {
      throw StageError{"parse", e.what()};
    } catch (const IoError& e) {
      throw StageError{"input", e.what()};
    }
  });
}

// `--formula` names a file when one exists at that path, else it is the
// formula text itself.
inline Formula read_formula_arg(const std::string& arg, const Signal& s) {
  std::string text = arg;
  std::error_code ec;
  if (std::filesystem::is_regular_file(arg, ec)) {
    std::ifstream in(arg);
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  return stage("parse", [&] { return parse_formula(text, s.names()); });
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Differentiable signal temporal logic: satisfaction, smooth "
               "robustness, gradients and optimization",
               "gradstl"};
  app.require_subcommand(1);

  std::string signal_path;
  std::string formula_arg;
  std::size_t at = 0;
  double gamma = 0.0;
  std::size_t steps = 500;
  double lr = 0.05;
  std::vector<std::size_t> pins;
  std::string config_path;
  std::string out_path;

  auto add_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--signal", signal_path, "signal CSV (t,<name>,...)")->required();
    cmd->add_option("--formula", formula_arg, "formula text or a file holding it")
        ->required();
    cmd->add_option("--at", at, "sample index the formula is judged at")
        ->capture_default_str();
  };

  CLI::App* check = app.add_subcommand("check", "boolean satisfaction");
  add_inputs(check);

  CLI::App* robustness = app.add_subcommand("robustness", "smooth robustness R*");
  add_inputs(robustness);
  robustness->add_option("--gamma", gamma, "smoothing (<= 0 gives hard min/max)")
      ->capture_default_str();

  CLI::App* grad = app.add_subcommand("grad", "gradient of R* for every entry");
  add_inputs(grad);
  grad->add_option("--gamma", gamma, "smoothing, must be > 0")->required();
  grad->add_option("--out", out_path, "gradient CSV (stdout when omitted)");

  CLI::App* optimize = app.add_subcommand("optimize", "Adam ascent on R*");
  add_inputs(optimize);
  double opt_gamma = 0.1;
  optimize->add_option("--gamma", opt_gamma, "smoothing, must be > 0")
      ->capture_default_str();
  optimize->add_option("--steps", steps, "Adam steps")->capture_default_str();
  optimize->add_option("--lr", lr, "learning rate")->capture_default_str();
  optimize->add_option("--pin", pins, "sample indices to freeze")->delimiter(',');
  optimize->add_option("--out", out_path, "output directory (final.csv, trace.csv)")
      ->required();

  CLI::App* cs = app.add_subcommand("casestudy", "run the robot navigation scenario");
  cs->add_option("--config", config_path, "scenario file (built-in default if omitted)");
  cs->add_option("--out", out_path, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kError;
  }

  try {
    if (check->parsed()) {
      const Signal s = detail::read_signal_arg(signal_path);
      const Formula f = detail::read_formula_arg(formula_arg, s);
      const bool ok = detail::stage("evaluate", [&] { return eval_estar(s, f, at).value; });
      out << (ok ? "true" : "false") << '\n';
      return ok ? kOk : kUnsatisfied;
    }
    if (robustness->parsed()) {
      const Signal s = detail::read_signal_arg(signal_path);
      const Formula f = detail::read_formula_arg(formula_arg, s);
      const double r = detail::stage("evaluate", [&] { return rstar(Gamma(gamma), s, f, at); });
      out << gradstl::detail::format_significant(r, 12) << '\n';
      return kOk;
    }
    if (grad->parsed()) {
      const Signal s = detail::read_signal_arg(signal_path);
      const Formula f = detail::read_formula_arg(formula_arg, s);
      const GradientTensor g = detail::stage("evaluate", [&] {
        return gradient(Gamma(gamma), s, f, at);
      });
      detail::stage("output", [&] {
        if (out_path.empty()) {
          write_gradient(out, g, s);
        } else {
          save_gradient(g, s, out_path);
        }
        return 0;
      });
      return kOk;
    }
    if (optimize->parsed()) {
      const Signal s = detail::read_signal_arg(signal_path);
      const Formula f = detail::read_formula_arg(formula_arg, s);
      OptimizerConfig cfg;
      cfg.steps = steps;
      cfg.learning_rate = lr;
      cfg.position = at;
      cfg.gamma = detail::stage("validate", [&] { return Gamma(opt_gamma); });
      if (!pins.empty()) {
        cfg.pin_mask.assign(s.values().size(), false);
        for (std::size_t k : pins) {
          if (k >= s.size()) {
            throw detail::StageError{"validate", "pinned sample " + std::to_string(k) +
                                                     " is outside the signal"};
          }
          for (std::size_t i = 0; i < s.width(); ++i) cfg.pin_mask[k * s.width() + i] = true;
        }
      }
      detail::stage("validate", [&] {
        validate(cfg, s);
        return 0;
      });
      const OptimizationTrace trace =
          detail::stage("evaluate", [&] { return optimize_signal(s, f, cfg); });
      const bool ok = eval_estar(trace.final_signal, f, at).value;
      detail::stage("output", [&] {
        std::filesystem::create_directories(out_path);
        save_signal(trace.final_signal, std::filesystem::path(out_path) / "final.csv");
        save_trace(trace, std::filesystem::path(out_path) / "trace.csv");
        return 0;
      });
      out << "final_robustness " << gradstl::detail::format_significant(trace.final_hard_robustness, 12)
          << '\n'
          << "satisfied " << (ok ? "true" : "false") << '\n';
      return kOk;
    }
    if (cs->parsed()) {
      const casestudy::Scenario sc = detail::stage("config", [&] {
        return config_path.empty() ? casestudy::default_scenario()
                                   : casestudy::load_scenario(config_path);
      });
      const casestudy::CaseStudyReport report =
          detail::stage("evaluate", [&] { return casestudy::run_case_study(sc, out_path); });
      out << casestudy::to_json(report).dump(2) << '\n';
      return kOk;
    }
  } catch (const detail::StageError& e) {
    err << "gradstl: " << e.stage << " error: " << e.message << '\n';
    return kError;
  } catch (const std::exception& e) {
    err << "gradstl: error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}

}  // namespace gradstl::cli
