#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gradstl/cli.hpp"
#include "support.hpp"

namespace gradstl {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the real binary; stderr is captured through a temp file.
Outcome run_binary(const std::string& args) {
  const fs::path err_file = fs::temp_directory_path() / "gradstl_cli_test_stderr.txt";
  const std::string cmd = std::string(GRADSTL_CLI_PATH) + " " + args + " 2> " +
                          err_file.string();
  Outcome r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream err(err_file);
  std::ostringstream ss;
  ss << err.rdbuf();
  r.err = ss.str();
  return r;
}

// Same entry point, in process.
Outcome run_inline(std::vector<std::string> args) {
  args.insert(args.begin(), "gradstl");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Outcome r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("gradstl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    save_signal(testing::eventually_signal(), eventually_path());
    save_signal(Signal({0.0, 1.0, 2.0}, {"x", "y"}, {-1, 2, 0.5, -1, -2, 3}), xy_path());
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string eventually_path() const { return (dir_ / "eventually.csv").string(); }
  std::string xy_path() const { return (dir_ / "xy.csv").string(); }

  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST_F(Cli, CheckWorkedExample) {
  const Outcome r = run_binary("check --signal " + eventually_path() + " --formula 'F[5,10]{v>20}'");
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.out, "false\n");
}

TEST_F(Cli, CheckTautology) {
  const Outcome r = run_binary("check --signal " + xy_path() + " --formula '{x>0} | !{x>0}'");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "true\n");
}

TEST_F(Cli, FormulaFromFile) {
  std::ofstream(dir_ / "f.stl") << "F[0,20] {v > 20}\n";
  const Outcome r = run_inline({"check", "--signal", eventually_path(), "--formula",
                                (dir_ / "f.stl").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "true\n");
}

TEST_F(Cli, Errors) {
  Outcome r = run_binary("check --signal " + (dir_ / "missing.csv").string() +
                         " --formula '{v>0}'");
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("error"), std::string::npos);

  r = run_inline({"check", "--signal", eventually_path(), "--formula", "{w>0}"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("parse error"), std::string::npos);

  r = run_inline({"check", "--signal", eventually_path(), "--formula", "{v>0}", "--at", "9"});
  EXPECT_EQ(r.code, 2);

  r = run_inline({"frobnicate"});
  EXPECT_EQ(r.code, 2);

  std::ofstream(dir_ / "bad.csv") << "t,v\n0,1\n0,2\n";
  r = run_inline({"check", "--signal", (dir_ / "bad.csv").string(), "--formula", "{v>0}"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("validate error"), std::string::npos);
}

TEST_F(Cli, Robustness) {
  Outcome r = run_binary("robustness --signal " + eventually_path() + " --formula '{v>20}' --at 5");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "8.2\n");
  r = run_inline({"robustness", "--signal", eventually_path(), "--formula", "F[5,10]{v>20}"});
  EXPECT_EQ(r.out, "-4.7\n");
  const Outcome pos = run_inline({"robustness", "--signal", eventually_path(), "--formula",
                                  "F[5,10]{v>20}", "--gamma", "0.2"});
  const Outcome neg = run_inline({"robustness", "--signal", eventually_path(), "--formula",
                                  "!F[5,10]{v>20}", "--gamma", "0.2"});
  EXPECT_EQ(std::stod(pos.out), -std::stod(neg.out));
}

TEST_F(Cli, RobustnessSignAgreesWithCheck) {
  for (const testing::Instance& in : testing::instance_suite(91, 40)) {
    const fs::path sig = dir_ / "r.csv";
    save_signal(in.signal, sig);
    const std::string f = print_formula(in.formula);
    const std::string at = std::to_string(in.position);
    const Outcome c = run_inline({"check", "--signal", sig.string(), "--formula", f, "--at", at});
    const Outcome r = run_inline({"robustness", "--signal", sig.string(), "--formula", f, "--at", at});
    ASSERT_EQ(r.code, 0) << r.err;
    const double value = std::stod(r.out);
    if (value > 0) {
      EXPECT_EQ(c.code, 0);
    }
    if (value < 0) {
      EXPECT_EQ(c.code, 1);
    }
  }
}

TEST_F(Cli, Grad) {
  Outcome r = run_inline({"grad", "--signal", xy_path(), "--formula", "F[0,2]{x>0}",
                          "--gamma", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  const Signal g = read_signal(in);
  EXPECT_EQ(g.names(), (std::vector<std::string>{"x", "y"}));
  const Signal s = load_signal(xy_path());
  const Formula f = parse_formula("F[0,2]{x>0}", s.names());
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(g.at(k, 1), 0.0);
    EXPECT_NEAR(g.at(k, 0), drstar(Gamma(0.5), s, f, 0, 0, k), 1e-12);
  }
  r = run_inline({"grad", "--signal", xy_path(), "--formula", "{x>0}", "--gamma", "0"});
  EXPECT_EQ(r.code, 2);
  r = run_inline({"grad", "--signal", xy_path(), "--formula", "{x>0}", "--gamma", "0.5",
                  "--out", (dir_ / "g.csv").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(dir_ / "g.csv"));
}

TEST_F(Cli, Optimize) {
  const fs::path a = dir_ / "a";
  const fs::path b = dir_ / "b";
  const std::string common = "optimize --signal " + xy_path() +
                             " --formula 'G[0,2]{x>0}' --gamma 0.1 --steps 200 --lr 0.1 --pin 0";
  Outcome r = run_binary(common + " --out " + a.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("final_robustness"), std::string::npos);
  EXPECT_NE(r.out.find("satisfied false"), std::string::npos);  // sample 0 is pinned at x = -1
  r = run_binary(common + " --out " + b.string());
  EXPECT_EQ(slurp(a / "final.csv"), slurp(b / "final.csv"));
  EXPECT_EQ(slurp(a / "trace.csv"), slurp(b / "trace.csv"));
  const Signal fin = load_signal(a / "final.csv");
  EXPECT_EQ(fin.at(0, 0), -1.0);
  EXPECT_GT(fin.at(1, 0), 0.0);

  r = run_inline({"optimize", "--signal", xy_path(), "--formula", "G[0,2]{x>0}", "--steps",
                  "200", "--lr", "0.1", "--out", (dir_ / "c").string()});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("satisfied true"), std::string::npos);

  r = run_inline({"optimize", "--signal", xy_path(), "--formula", "{x>0}", "--steps", "0",
                  "--out", (dir_ / "d").string()});
  EXPECT_EQ(r.code, 2);
  r = run_inline({"optimize", "--signal", xy_path(), "--formula", "{x>0}", "--pin", "7",
                  "--out", (dir_ / "e").string()});
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, CaseStudyShortRun) {
  std::ofstream(dir_ / "short.cfg") << "[optimizer]\nsteps = 3\n";
  const fs::path out = dir_ / "cs" / "run";
  const Outcome r = run_binary("casestudy --config " + (dir_ / "short.cfg").string() +
                               " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const nlohmann::json j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["steps_run"].get<int>(), 3);
  EXPECT_TRUE(fs::exists(out / "report.json"));
  EXPECT_TRUE(fs::exists(out / "trace.csv"));
}

TEST_F(Cli, CaseStudyBadConfig) {
  std::ofstream(dir_ / "bad.cfg") << "[timing]\nhorizon = soon\n";
  const Outcome r = run_inline({"casestudy", "--config", (dir_ / "bad.cfg").string(), "--out",
                                (dir_ / "x").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("timing.horizon"), std::string::npos);
}

}  // namespace
}  // namespace gradstl
