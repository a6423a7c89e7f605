// home: command-line front end.
//
//   home run          [--config FILE] [--model 1|2] [--n1 N] ... [--out DIR]
//   home validate     [--seed S] [--trials T] [--out FILE]
//   home gen-instance [--model 1|2] [--n1 N] [--n2 N] [--r R] [--outliers O]
//                     [--seed S] [--out FILE]
//
// Exit codes: 0 success, 1 solver or I/O failure, 2 configuration error.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "home/csv.hpp"
#include "home/experiment.hpp"
#include "home/matrix_recovery.hpp"
#include "home/validation.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kConfigError = 2;

int report(const home::Error& e) {
  std::cerr << "home: " << e.what() << " [" << home::to_string(e.code()) << "]\n";
  return e.code() == home::ErrorCode::kInvalidArgument ? kConfigError : kFailure;
}

struct RunOptions {
  std::string config;
  std::map<std::string, std::string> values;
  bool timing = false;
};

void add_run_options(CLI::App& cmd, RunOptions& opts) {
  cmd.add_option("--config", opts.config, "flat key = value configuration file");
  const std::pair<const char*, const char*> keys[] = {
      {"model", "1 (symmetric, Phi) or 2 (asymmetric, Psi)"},
      {"n1", "rows of the target matrix"},
      {"n2", "columns of the target matrix"},
      {"r", "rank"},
      {"p", "regularization order p > 1"},
      {"gamma", "envelope parameter gamma > 0"},
      {"theta", "backtracking factor in (0, 1)"},
      {"outliers", "outlier fraction in [0, 1)"},
      {"seed", "instance and initial-point seed"},
      {"iters", "outer iterations of the HiPPA methods"},
      {"seconds", "wall-clock budget per method"},
      {"oracle-calls", "subgradient evaluations per method"},
      {"methods", "comma-separated list or 'all'"},
      {"out", "output directory"},
      {"residual-tol", "stop when the residual norm reaches this value"},
      {"sgdss-lambda", "initial SG-DSS step"},
      {"sgdss-q", "SG-DSS step decay"},
  };
  for (const auto& [key, help] : keys) {
    cmd.add_option_function<std::string>(
        std::string("--") + key,
        [&opts, k = std::string(key)](const std::string& v) { opts.values[k] = v; }, help);
  }
  cmd.add_flag("--timing", opts.timing, "record wall-clock times in the trace files");
}

int do_run(const RunOptions& opts) {
  home::ExperimentConfig cfg;
  try {
    home::ConfigEntries file;
    if (!opts.config.empty()) file = home::read_config_file(opts.config);
    home::ConfigEntries flags(opts.values.begin(), opts.values.end());
    if (opts.timing) flags.emplace_back("timing", "true");
    cfg = home::parse_config(file, flags);
  } catch (const home::Error& e) {
    std::cerr << "home: configuration error: " << e.what() << "\n";
    return kConfigError;
  }

  home::ExperimentResult result;
  try {
    result = home::run_experiment(cfg);
  } catch (const home::Error& e) {
    return report(e);
  }

  for (const auto& m : result.methods) {
    std::printf("%-14s objective %s  recovery-error %s  iterations %d  oracle-calls %lld  %s\n",
                m.method.name().c_str(), home::format_double(m.final_objective).c_str(),
                home::format_double(m.final_recovery_error).c_str(), m.iterations,
                m.oracle_calls, m.failure ? ("FAILED: " + *m.failure).c_str()
                                          : m.stop_reason.c_str());
  }
  if (!cfg.output_dir.empty()) std::printf("outputs written to %s\n", cfg.output_dir.c_str());
  return result.any_failure() ? kFailure : kOk;
}

int do_validate(std::uint64_t seed, int trials, const std::string& out) {
  try {
    const auto reports = home::run_validation_suite(seed, trials);
    bool all = true;
    for (const auto& r : reports) {
      all = all && r.passed;
      std::printf("%s  %s  (max violation %s, tolerance %s)\n", r.passed ? "PASS" : "FAIL",
                  r.name.c_str(), home::format_double(r.max_violation).c_str(),
                  home::format_double(r.tolerance).c_str());
    }
    if (!out.empty()) home::write_file_atomic(out, home::to_json(reports) + "\n");
    return all ? kOk : kFailure;
  } catch (const home::Error& e) {
    return report(e);
  }
}

struct InstanceOptions {
  std::string model = "1";
  int n1 = 50;
  std::optional<int> n2;
  int r = 5;
  double outliers = 0.3;
  std::uint64_t seed = 1;
  std::string out = "instance.json";
};

int do_gen_instance(const InstanceOptions& o) {
  home::RecoveryInstance inst;
  try {
    home::ModelConfig mc;
    mc.model = home::parse_recovery_model(o.model);
    mc.outlier_ratio = o.outliers;
    mc.validate();
    const int n2 = o.n2.value_or(mc.model == home::RecoveryModel::kSymmetric ? o.n1 : 40);
    inst = home::generate_instance(mc, o.n1, n2, o.r, o.seed);
  } catch (const home::Error& e) {
    std::cerr << "home: configuration error: " << e.what() << "\n";
    return kConfigError;
  }
  try {
    home::write_file_atomic(o.out, home::instance_to_json(inst));
  } catch (const home::Error& e) {
    return report(e);
  }
  std::printf("wrote %s (m = %d)\n", o.out.c_str(), inst.m);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-order proximal-point methods for robust matrix recovery"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "run a matrix-recovery experiment");
  add_run_options(*run, run_opts);

  std::uint64_t vseed = 1;
  int trials = 1000;
  std::string vout;
  auto* validate = app.add_subcommand("validate", "run the validation suites");
  validate->add_option("--seed", vseed, "sampling seed");
  validate->add_option("--trials", trials, "random samples per configuration")
      ->check(CLI::NonNegativeNumber);
  validate->add_option("--out", vout, "write the JSON report here");

  InstanceOptions inst;
  auto* gen = app.add_subcommand("gen-instance", "write a matrix-recovery instance file");
  gen->add_option("--model", inst.model, "1 or 2");
  gen->add_option("--n1", inst.n1, "rows");
  gen->add_option("--n2", inst.n2, "columns");
  gen->add_option("--r", inst.r, "rank");
  gen->add_option("--outliers", inst.outliers, "outlier fraction");
  gen->add_option("--seed", inst.seed, "instance seed");
  gen->add_option("--out", inst.out, "output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  if (*run) return do_run(run_opts);
  if (*validate) return do_validate(vseed, trials, vout);
  return do_gen_instance(inst);
}
