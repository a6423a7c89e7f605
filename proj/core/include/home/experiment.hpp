#pragma once

// Matrix-recovery experiments: configuration, method orchestration and
// output files.
//
// Budgets. With `outer_iterations = N`, the HiPPA variants stop after N
// outer iterations and every subgradient baseline runs the same number of
// subgradient evaluations that N plain HiPPA iterations may spend,
// sum_{k=0}^{N} I_k. With `oracle_calls = C` every method is capped at C
// subgradient evaluations. With `seconds = S` every method is capped at S
// seconds of wall-clock time. Budgets combine; the first one hit stops a
// method.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "home/csv.hpp"
#include "home/hippa.hpp"
#include "home/matrix_recovery.hpp"

namespace home {

enum class MethodKind { kBoostedHippa, kHippa, kSgDss, kSgCss, kSgPss };

struct MethodSpec {
  MethodKind kind = MethodKind::kBoostedHippa;
  /// Step size of sg-css.
  double alpha = 0.0;

  /// boosted-hippa, hippa, sg-dss, sg-css(<alpha>), sg-pss.
  std::string name() const;
  /// name() with parentheses replaced, for file names.
  std::string file_stem() const;
  bool is_hippa() const { return kind == MethodKind::kBoostedHippa || kind == MethodKind::kHippa; }

  friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

MethodSpec parse_method(const std::string& text);
/// Comma-separated list; commas inside parentheses do not split. "all"
/// expands to default_methods().
std::vector<MethodSpec> parse_methods(const std::string& text);
/// Boosted HiPPA, HiPPA, SG-DSS, SG-CSS with 0.01, 0.1, 1, and SG-PSS.
std::vector<MethodSpec> default_methods();

struct ExperimentConfig {
  RecoveryModel model = RecoveryModel::kSymmetric;
  int n1 = 50;
  int n2 = 50;
  int r = 5;
  double p = 1.25;
  double gamma = 0.5;
  double theta_ls = 0.8;
  double outlier_ratio = 0.3;
  std::uint64_t seed = 1;
  std::vector<MethodSpec> methods = default_methods();
  std::optional<int> outer_iterations = 40;
  std::optional<double> seconds;
  std::optional<long long> oracle_calls;
  double residual_tol = 1e-6;
  /// SG-DSS steps lambda q^i for the inner solves and the sg-dss baseline.
  double sgdss_lambda = 1.0;
  double sgdss_q = 0.93;
  /// Write measured wall-clock times; otherwise elapsed_seconds is 0 so
  /// output files are byte-reproducible.
  bool timing = false;
  std::string output_dir = "out";

  /// Model 1: n = 50, r = 5, gamma = 0.5. Model 2: 50 x 40, r = 5, gamma = 1.
  static ExperimentConfig defaults(RecoveryModel model);

  EnvelopeParams envelope_params() const;
  ModelConfig model_config() const;
  /// Throws InvalidArgument naming the offending setting.
  void validate() const;
};

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Recognised keys (also the long flag names of `home run`).
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines; '#' starts a comment. Throws InvalidArgument
/// on malformed lines and IoFailure when the file cannot be read.
ConfigEntries read_config_file(const std::string& path);

/// Defaults < file < flags. The model is resolved first so the remaining
/// defaults follow it. Unknown keys and malformed values throw
/// InvalidArgument naming the key.
ExperimentConfig parse_config(const ConfigEntries& file, const ConfigEntries& flags = {});

/// sum_{k=0}^{outer} I_k.
long long inner_calls_for_outer(const InnerBudgetSchedule& schedule, int outer);

struct MethodOutcome {
  MethodSpec method;
  std::vector<TraceRow> trace;
  /// Reported point: the last HiPPA iterate, or the best baseline iterate.
  Point final_point;
  double final_objective = 0.0;
  double final_recovery_error = 0.0;
  long long oracle_calls = 0;
  int iterations = 0;
  std::string stop_reason;
  int fallbacks = 0;
  std::optional<std::string> failure;
  ErrorCode failure_code = ErrorCode::kSolverDiverged;

  // HiPPA variants only.
  double min_descent_slack = 0.0;
  bool descent_holds = true;
  double max_lyapunov_increase = 0.0;
  TelescopedBound telescoped;
  std::optional<double> iteration_bound;
  bool iteration_bound_holds = true;
};

struct ExperimentResult {
  ExperimentConfig config;
  int m = 0;
  int outlier_count = 0;
  double lambda_reg = 0.0;
  double ground_truth_objective = 0.0;
  double initial_objective = 0.0;
  long long baseline_iterations = 0;
  std::vector<MethodOutcome> methods;

  bool any_failure() const;
};

/// x0 with i.i.d. standard normal entries from derive_seed(seed, 1).
Point initial_point(std::uint64_t seed, Eigen::Index dimension);

/// Runs every configured method from the shared initial point. When
/// config.output_dir is non-empty, writes trace_<method>.csv as each method
/// finishes, then plot_data.csv and summary.json. A method that fails keeps
/// its partial trace and is reported in the summary.
ExperimentResult run_experiment(const ExperimentConfig& config);

std::string summary_json(const ExperimentResult& result);

}  // namespace home
