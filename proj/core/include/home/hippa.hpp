#pragma once

// Upper level of the two-level scheme: the inexact high-order proximal-point
// iteration (HiPPA)
//
//   x^{k+1} = prox^{p, eps_k}(x^k)
//
// and its boosted variant, which extrapolates along the spectral direction
// d^k = -sigma_k R^k (R^k = x^k - prox^{p, eps_k}(x^k)) and backtracks
// towards the HiPPA point until the inexact descent condition
//
//   M^{eps_{k+1}}(x^{k+1}) <= M^{eps_k}(x^k) - sigma ||R^k||^p + eps_k + eps_{k+1}
//
// holds.

#include <functional>
#include <optional>
#include <vector>

#include "home/envelope.hpp"
#include "home/inner_solvers.hpp"

namespace home {

/// Non-increasing summable accuracies eps_k.
class ErrorSchedule {
 public:
  /// eps_k = 1/(k+1)^2, sum pi^2/6.
  ErrorSchedule();
  /// `sum` must bound the full series.
  ErrorSchedule(std::function<double(int)> epsilon_at, double sum);

  double epsilon(int k) const { return epsilon_at_(k); }
  double sum() const { return sum_; }
  /// sum_{j >= k} eps_j.
  double tail(int k) const;

 private:
  std::function<double(int)> epsilon_at_;
  double sum_;
};

struct SpectralConfig {
  double sigma_min = 1e-1;
  double sigma_max = 1e10;
  double sigma_0 = 1.0;

  void validate() const;
};

struct IterateTrace {
  int k = 0;
  double residual_norm = 0.0;
  double envelope_value_inexact = 0.0;
  double objective_value = 0.0;
  /// Line-search data of the step that produced x^k (zero at k = 0).
  int backtracks = 0;
  double alpha = 0.0;
  double sigma_k = 0.0;
  bool fallback = false;
  /// Inner iterations spent on the prox at x^k (including rejected
  /// candidates of the line search that produced x^k).
  int inner_iterations = 0;
  long long oracle_calls = 0;
  double elapsed_seconds = 0.0;
};

struct StoppingRule {
  double residual_tol = 1e-6;
  std::optional<int> max_outer_iterations;
  std::optional<double> max_seconds;
  /// Cap on inner subgradient evaluations over the whole run; the last
  /// inner solve is truncated to fit.
  std::optional<long long> max_oracle_calls;

  void validate() const;
};

/// Computes an inexact prox at `anchor` with the given inner iteration
/// count.
using ProxSolver = std::function<ProxApproximation(const Point& anchor, int iterations)>;

/// SG-DSS prox solver warm-started at the anchor.
ProxSolver sgdss_prox_solver(const ObjectiveOracle& f, const EnvelopeParams& params,
                             double lambda = 1.0, double q = 0.93);

struct HippaConfig {
  EnvelopeParams params;
  ErrorSchedule schedule;
  InnerBudgetSchedule budget;
  StoppingRule stop;
  SpectralConfig spectral;
  int max_backtracks = 50;
};

enum class StopReason { kResidual, kOuterIterations, kTime, kOracleCalls };

struct RunResult {
  Point x;
  std::vector<IterateTrace> trace;
  /// x^k for every trace record.
  std::vector<Point> iterates;
  StopReason reason = StopReason::kOuterIterations;
  long long oracle_calls = 0;
  int fallbacks = 0;
};

/// Error raised mid-run; carries the trace recorded so far.
class RunFailure : public Error {
 public:
  RunFailure(const Error& cause, std::vector<IterateTrace> trace)
      : Error(cause.code(), cause.what()), trace_(std::move(trace)) {}
  const std::vector<IterateTrace>& trace() const { return trace_; }

 private:
  std::vector<IterateTrace> trace_;
};

/// |<s,s>/<s,y>| when it lies in [sigma_min, sigma_max]; otherwise 1 if the
/// residual exceeds 1, 1e5 if it is below 1e-5, else 1/residual.
double spectral_sigma(const Point& s, const Point& y, double residual_norm_current,
                      const SpectralConfig& cfg);

/// State threaded between boosted steps.
struct BoostedState {
  Point x;
  ProxApproximation prox;  // prox^{eps_k} at x
  std::optional<Point> prev_x;
  std::optional<Point> prev_residual;
};

struct BoostedStepResult {
  BoostedState next;
  IterateTrace record;  // describes next.x
  bool accepted = true;  // false when the oracle budget ran out mid-search
  int inner_spent = 0;
};

/// One iteration of Boosted HiPPA from state.x (iteration index k).
/// `inner_budget_left` (if set) is decremented by the inner iterations used.
BoostedStepResult boosted_hippa_step(const BoostedState& state, const ObjectiveOracle& f,
                                     const HippaConfig& cfg, int k, const ProxSolver& solver,
                                     long long* inner_budget_left = nullptr);

RunResult hippa_run(const Point& x0, const ObjectiveOracle& f, const HippaConfig& cfg,
                    const ProxSolver& solver);
RunResult hippa_run(const Point& x0, const ObjectiveOracle& f, const HippaConfig& cfg);

RunResult boosted_hippa_run(const Point& x0, const ObjectiveOracle& f,
                            const HippaConfig& cfg, const ProxSolver& solver);
RunResult boosted_hippa_run(const Point& x0, const ObjectiveOracle& f,
                            const HippaConfig& cfg);

/// Whether consecutive trace records satisfy the inexact descent condition,
/// re-evaluated from the stored values. Returns the slack per accepted step
/// (rhs - lhs; negative means violated). Fallback steps are skipped.
std::vector<double> descent_certificates(const std::vector<IterateTrace>& trace,
                                         const EnvelopeParams& params,
                                         const ErrorSchedule& schedule);

/// sum_k sigma ||R^k||^p over all records but the last, and the bound
/// M^{eps_0}(x^0) - f_low + 2 * sum(eps).
struct TelescopedBound {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs; }
};
TelescopedBound telescoped_bound(const std::vector<IterateTrace>& trace,
                                 const EnvelopeParams& params, const ErrorSchedule& schedule,
                                 double f_low);

/// M^{eps_k}(x^k) + sum_{j>=k} eps_j + sum_{j>=k+1} eps_j along the trace.
std::vector<double> lyapunov_sequence(const std::vector<IterateTrace>& trace,
                                      const ErrorSchedule& schedule);

/// ceil((M^{eps_0}(x^0) - f_low + 2 sum(eps)) / (sigma tol^p)).
double iteration_bound(double envelope0, double f_low, const EnvelopeParams& params,
                       const ErrorSchedule& schedule, double tol);

}  // namespace home
