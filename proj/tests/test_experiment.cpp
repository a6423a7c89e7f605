#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "home/csv.hpp"
#include "home/experiment.hpp"

namespace fs = std::filesystem;

namespace home {
namespace {

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("home_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig SmallConfig(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.n1 = cfg.n2 = 6;
  cfg.r = 2;
  cfg.outer_iterations = 3;
  cfg.methods = parse_methods("boosted-hippa,hippa,sg-css(0.1)");
  cfg.output_dir = out.string();
  return cfg;
}

TEST(ParseConfig, EmptyGivesModelOneDefaults) {
  const auto cfg = parse_config({});
  EXPECT_EQ(cfg.model, RecoveryModel::kSymmetric);
  EXPECT_EQ(cfg.n1, 50);
  EXPECT_EQ(cfg.n2, 50);
  EXPECT_EQ(cfg.r, 5);
  EXPECT_DOUBLE_EQ(cfg.p, 1.25);
  EXPECT_DOUBLE_EQ(cfg.gamma, 0.5);
  EXPECT_DOUBLE_EQ(cfg.theta_ls, 0.8);
  EXPECT_DOUBLE_EQ(cfg.outlier_ratio, 0.3);
  EXPECT_EQ(cfg.outer_iterations, 40);
  EXPECT_EQ(cfg.methods, default_methods());
}

TEST(ParseConfig, ModelTwoDefaults) {
  const auto cfg = parse_config({{"model", "2"}});
  EXPECT_EQ(cfg.model, RecoveryModel::kAsymmetric);
  EXPECT_EQ(cfg.n1, 50);
  EXPECT_EQ(cfg.n2, 40);
  EXPECT_DOUBLE_EQ(cfg.gamma, 1.0);
}

TEST(ParseConfig, FlagsOverrideFile) {
  const auto cfg = parse_config({{"gamma", "0.3"}, {"seed", "5"}}, {{"gamma", "0.7"}});
  EXPECT_DOUBLE_EQ(cfg.gamma, 0.7);
  EXPECT_EQ(cfg.seed, 5u);
}

TEST(ParseConfig, SymmetricSizeMirrors) {
  EXPECT_EQ(parse_config({{"n1", "12"}}).n2, 12);
  EXPECT_EQ(parse_config({{"n2", "9"}}).n1, 9);
}

TEST(ParseConfig, UnknownKeyNamed) {
  try {
    parse_config({{"gama", "1"}});
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("gama"), std::string::npos);
  }
}

TEST(ParseConfig, RejectsBadValues) {
  try {
    parse_config({}, {{"gamma", "-1"}});
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("gamma must be > 0"), std::string::npos);
  }
  EXPECT_THROW(parse_config({{"p", "abc"}}), InvalidArgument);
  EXPECT_THROW(parse_config({{"n1", "2.5"}}), InvalidArgument);
  EXPECT_THROW(parse_config({{"model", "1"}, {"n1", "4"}, {"n2", "5"}}), InvalidArgument);
  EXPECT_THROW(parse_config({{"theta", "1"}}), InvalidArgument);
}

TEST(ParseConfig, TimeBudgetDropsDefaultIterations) {
  const auto cfg = parse_config({{"seconds", "2"}});
  EXPECT_FALSE(cfg.outer_iterations.has_value());
  EXPECT_EQ(cfg.seconds, 2.0);
  const auto both = parse_config({{"seconds", "2"}, {"iters", "5"}});
  EXPECT_EQ(both.outer_iterations, 5);
}

TEST(ConfigFile, ParsesCommentsAndWhitespace) {
  const fs::path dir = FreshDir("config");
  fs::create_directories(dir);
  const fs::path file = dir / "run.cfg";
  std::ofstream(file) << "# experiment\nmodel = 2\n  gamma=0.25  # trailing\n\nmethods = hippa, sg-dss\n";
  const auto entries = read_config_file(file.string());
  ASSERT_EQ(entries.size(), 3u);
  const auto cfg = parse_config(entries);
  EXPECT_EQ(cfg.model, RecoveryModel::kAsymmetric);
  EXPECT_DOUBLE_EQ(cfg.gamma, 0.25);
  ASSERT_EQ(cfg.methods.size(), 2u);
  std::ofstream(file) << "model 2\n";
  EXPECT_THROW(read_config_file(file.string()), InvalidArgument);
  EXPECT_THROW(read_config_file((dir / "missing.cfg").string()), IoFailure);
  fs::remove_all(dir);
}

TEST(Methods, ParseAndName) {
  const auto all = parse_methods("all");
  ASSERT_EQ(all.size(), 7u);
  EXPECT_EQ(all[0].name(), "boosted-hippa");
  EXPECT_EQ(all[1].name(), "hippa");
  EXPECT_EQ(all[2].name(), "sg-dss");
  EXPECT_EQ(all[3].name(), "sg-css(0.01)");
  EXPECT_EQ(all[4].name(), "sg-css(0.1)");
  EXPECT_EQ(all[5].name(), "sg-css(1)");
  EXPECT_EQ(all[6].name(), "sg-pss");
  EXPECT_EQ(all[4].file_stem(), "sg-css-0.1");
  const auto two = parse_methods(" sg-css(0.5) ,hippa");
  ASSERT_EQ(two.size(), 2u);
  EXPECT_DOUBLE_EQ(two[0].alpha, 0.5);
  EXPECT_THROW(parse_methods("hippa,hippa"), InvalidArgument);
  EXPECT_THROW(parse_method("sg-css(-1)"), InvalidArgument);
  EXPECT_THROW(parse_method("newton"), InvalidArgument);
  EXPECT_THROW(parse_methods(""), InvalidArgument);
}

TEST(Budget, InnerCallsForOuter) {
  const InnerBudgetSchedule schedule;
  EXPECT_EQ(inner_calls_for_outer(schedule, 0), 50);
  EXPECT_EQ(inner_calls_for_outer(schedule, 2), 150);
  // 3*50 + 17*300 + 10*500 + 11*800
  EXPECT_EQ(inner_calls_for_outer(schedule, 40), 150 + 5100 + 5000 + 8800);
}

TEST(Csv, FormatDouble) {
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  for (double v : {0.1, 1.0 / 3.0, 2.718281828459045e-300, -123456.789}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
}

TEST(Csv, TraceHeaderAndRows) {
  TraceRow row;
  row.iterate.k = 2;
  row.iterate.residual_norm = 0.25;
  row.iterate.objective_value = 1.5;
  row.iterate.envelope_value_inexact = 1.0;
  row.iterate.backtracks = 3;
  row.iterate.sigma_k = 0.125;
  row.recovery_error = 0.75;
  const std::string csv = trace_csv({row});
  EXPECT_EQ(csv,
            "k,residual_norm,objective_value,envelope_value_inexact,backtracks,sigma_k,"
            "elapsed_seconds,recovery_error\n"
            "2,0.25,1.5,1,3,0.125,0,0.75\n");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
}

TEST(Csv, PlotDataLongFormat) {
  std::vector<TraceRow> rows(3);
  for (int k = 0; k < 3; ++k) {
    rows[k].iterate.k = k;
    rows[k].iterate.residual_norm = 1.0 / (k + 1);
    rows[k].iterate.objective_value = 10.0 - k;
  }
  const std::string csv = plot_data_csv({{"hippa", rows}, {"sg-dss", rows}});
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "method,k,metric,value");
  int count = 0;
  std::string first;
  while (std::getline(in, line)) {
    if (count == 0) first = line;
    ++count;
  }
  EXPECT_EQ(count, 12);
  EXPECT_EQ(first, "hippa,0,residual_norm,1");
  EXPECT_THROW(plot_data_csv({{"hippa", rows}}, {"bogus"}), InvalidArgument);
}

TEST(Csv, AtomicWrite) {
  const fs::path dir = FreshDir("atomic");
  fs::create_directories(dir);
  const fs::path file = dir / "x.txt";
  write_file_atomic(file.string(), "first\n");
  write_file_atomic(file.string(), "second\n");
  EXPECT_EQ(ReadFile(file), "second\n");
  EXPECT_FALSE(fs::exists(dir / "x.txt.tmp"));
  EXPECT_THROW(write_file_atomic((dir / "no" / "such" / "dir.txt").string(), "x"), IoFailure);
  fs::remove_all(dir);
}

TEST(Experiment, ZeroIterationsRecordsOnlyStart) {
  const fs::path dir = FreshDir("zero");
  auto cfg = SmallConfig(dir);
  cfg.outer_iterations = 0;
  cfg.methods = parse_methods("hippa,boosted-hippa");
  const auto result = run_experiment(cfg);
  for (const auto& m : result.methods) {
    ASSERT_EQ(m.trace.size(), 1u) << m.method.name();
    EXPECT_EQ(m.trace[0].iterate.k, 0);
    EXPECT_EQ(m.iterations, 0);
  }
  fs::remove_all(dir);
}

TEST(Experiment, WritesOutputsAndIsReproducible) {
  const fs::path a = FreshDir("rep_a");
  const fs::path b = FreshDir("rep_b");
  const auto ra = run_experiment(SmallConfig(a));
  run_experiment(SmallConfig(b));
  EXPECT_FALSE(ra.any_failure());
  for (const char* name : {"trace_boosted-hippa.csv", "trace_hippa.csv", "trace_sg-css-0.1.csv",
                           "plot_data.csv", "summary.json"}) {
    ASSERT_TRUE(fs::exists(a / name)) << name;
    EXPECT_EQ(ReadFile(a / name), ReadFile(b / name)) << name;
  }
  const auto summary = nlohmann::json::parse(ReadFile(a / "summary.json"));
  EXPECT_EQ(summary.at("methods").size(), 3u);
  const std::string trace = ReadFile(a / "trace_hippa.csv");
  EXPECT_EQ(trace.find('\r'), std::string::npos);
  EXPECT_EQ(trace.substr(0, trace.find('\n')),
            "k,residual_norm,objective_value,envelope_value_inexact,backtracks,sigma_k,"
            "elapsed_seconds,recovery_error");
  // One row per recorded HiPPA iterate: k = 0..3.
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 5);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, BaselinesShareInnerBudget) {
  auto cfg = SmallConfig("");
  cfg.methods = parse_methods("hippa,sg-pss");
  const auto result = run_experiment(cfg);
  EXPECT_EQ(result.baseline_iterations, inner_calls_for_outer(InnerBudgetSchedule{}, 3));
  EXPECT_LE(result.methods[0].oracle_calls, result.baseline_iterations);
  EXPECT_LE(result.methods[1].oracle_calls, result.baseline_iterations + 1);
  // Best-seen reporting never exceeds the starting objective.
  EXPECT_LE(result.methods[1].final_objective, result.initial_objective);
}

TEST(Experiment, OracleCallCap) {
  auto cfg = SmallConfig("");
  cfg.outer_iterations.reset();
  cfg.oracle_calls = 400;
  cfg.methods = parse_methods("boosted-hippa,sg-dss");
  const auto result = run_experiment(cfg);
  for (const auto& m : result.methods) EXPECT_LE(m.oracle_calls, 400 + 1) << m.method.name();
}

TEST(Experiment, SeedChangesInitialPoint) {
  EXPECT_EQ(initial_point(4, 6), initial_point(4, 6));
  EXPECT_NE(initial_point(4, 6), initial_point(5, 6));
}

#ifdef HOME_CLI_PATH
int RunCli(const std::string& args) {
  const std::string cmd = std::string(HOME_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  const fs::path dir = FreshDir("cli");
  EXPECT_EQ(RunCli("run --n1 6 --r 2 --iters 2 --methods hippa,sg-dss --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "trace_hippa.csv"));
  EXPECT_EQ(RunCli("run --gamma -1 --out " + dir.string()), 2);
  EXPECT_EQ(RunCli("run --bogus 1"), 2);
  EXPECT_EQ(RunCli("run --methods newton"), 2);
  EXPECT_EQ(RunCli(""), 2);
  EXPECT_EQ(RunCli("gen-instance --n1 6 --r 2 --out " + (dir / "inst.json").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "inst.json"));
  EXPECT_EQ(RunCli("gen-instance --model 3"), 2);
  EXPECT_EQ(RunCli("gen-instance --n1 6 --r 2 --out /nonexistent/dir/inst.json"), 1);
  EXPECT_EQ(RunCli("validate --trials 20 --out " + (dir / "validation.json").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "validation.json"));
  fs::remove_all(dir);
}
#endif

}  // namespace
}  // namespace home
