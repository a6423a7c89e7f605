#include "home/hippa.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

namespace home {

ErrorSchedule::ErrorSchedule()
    : epsilon_at_([](int k) { return 1.0 / ((k + 1.0) * (k + 1.0)); }),
      sum_(std::numbers::pi * std::numbers::pi / 6.0) {}

ErrorSchedule::ErrorSchedule(std::function<double(int)> epsilon_at, double sum)
    : epsilon_at_(std::move(epsilon_at)), sum_(sum) {
  if (!epsilon_at_) throw InvalidArgument("error schedule needs a function");
  if (!(std::isfinite(sum_) && sum_ > 0.0)) {
    throw InvalidArgument("error schedule sum must be finite and positive");
  }
}

double ErrorSchedule::tail(int k) const {
  double head = 0.0;
  for (int j = 0; j < k; ++j) head += epsilon(j);
  return std::max(0.0, sum_ - head);
}

void SpectralConfig::validate() const {
  if (!(sigma_min > 0.0 && sigma_min < sigma_max)) {
    throw InvalidArgument("spectral bounds need 0 < sigma_min < sigma_max");
  }
  if (!(sigma_0 > 0.0)) throw InvalidArgument("sigma_0 must be > 0");
}

void StoppingRule::validate() const {
  if (!(residual_tol >= 0.0)) throw InvalidArgument("residual tolerance must be >= 0");
  if (!max_outer_iterations && !max_seconds && !max_oracle_calls) {
    throw InvalidArgument("stopping rule needs at least one finite budget");
  }
  if (max_outer_iterations && *max_outer_iterations < 0) {
    throw InvalidArgument("outer iteration budget must be >= 0");
  }
  if (max_seconds && !(*max_seconds >= 0.0)) throw InvalidArgument("time budget must be >= 0");
  if (max_oracle_calls && *max_oracle_calls < 0) {
    throw InvalidArgument("oracle-call budget must be >= 0");
  }
}

ProxSolver sgdss_prox_solver(const ObjectiveOracle& f, const EnvelopeParams& params,
                             double lambda, double q) {
  return [&f, params, lambda, q](const Point& anchor, int iterations) {
    if (iterations == 0) return make_prox_approximation(anchor, anchor, f, params);
    return solve_prox_sgdss(anchor, f, params, SgdssSchedule{lambda, q, iterations});
  };
}

double spectral_sigma(const Point& s, const Point& y, double residual_norm_current,
                      const SpectralConfig& cfg) {
  require_dimension(y, s.size(), "spectral difference");
  const double sy = s.dot(y);
  if (std::abs(sy) > 1e-300) {
    const double candidate = std::abs(s.squaredNorm() / sy);
    if (std::isfinite(candidate) && candidate >= cfg.sigma_min && candidate <= cfg.sigma_max) {
      return candidate;
    }
  }
  if (residual_norm_current > 1.0) return 1.0;
  if (residual_norm_current < 1e-5) return 1e5;
  return 1.0 / residual_norm_current;
}

namespace {

using Clock = std::chrono::steady_clock;

class Budget {
 public:
  Budget(const StoppingRule& stop) : stop_(stop), start_(Clock::now()) {
    if (stop.max_oracle_calls) calls_left_ = *stop.max_oracle_calls;
  }

  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - start_).count();
  }
  long long* calls_left() { return stop_.max_oracle_calls ? &calls_left_ : nullptr; }
  int clamp(int iterations) const {
    return stop_.max_oracle_calls
               ? static_cast<int>(std::min<long long>(iterations, calls_left_))
               : iterations;
  }
  void spend(int iterations) {
    used_ += iterations;
    if (stop_.max_oracle_calls) calls_left_ -= iterations;
  }
  void note_used(long long n) { used_ += n; }
  long long used() const { return used_; }

  // Reason to stop before starting outer iteration k, if any.
  std::optional<StopReason> exhausted(int k) const {
    if (stop_.max_outer_iterations && k >= *stop_.max_outer_iterations) {
      return StopReason::kOuterIterations;
    }
    if (stop_.max_seconds && elapsed() >= *stop_.max_seconds) return StopReason::kTime;
    if (stop_.max_oracle_calls && calls_left_ <= 0) return StopReason::kOracleCalls;
    return std::nullopt;
  }

 private:
  StoppingRule stop_;
  Clock::time_point start_;
  long long calls_left_ = 0;
  long long used_ = 0;
};

IterateTrace make_record(int k, const Point& x, const ProxApproximation& prox,
                         const ObjectiveOracle& f) {
  IterateTrace rec;
  rec.k = k;
  rec.residual_norm = residual_norm(prox);
  rec.envelope_value_inexact = prox.envelope_value_inexact;
  rec.objective_value = require_finite(f.value(x), "objective oracle");
  rec.inner_iterations = prox.inner_iterations;
  return rec;
}

void validate_config(const HippaConfig& cfg) {
  cfg.params.validate();
  cfg.spectral.validate();
  cfg.stop.validate();
  if (cfg.max_backtracks < 1) throw InvalidArgument("max_backtracks must be >= 1");
}

}  // namespace

RunResult hippa_run(const Point& x0, const ObjectiveOracle& f, const HippaConfig& cfg,
                    const ProxSolver& solver) {
  validate_config(cfg);
  require_dimension(x0, f.dimension(), "initial point");
  RunResult result;
  Budget budget(cfg.stop);
  result.x = x0;
  try {
    ProxApproximation prox = solver(x0, budget.clamp(cfg.budget.iterations_at(0)));
    budget.spend(prox.inner_iterations);
    IterateTrace rec = make_record(0, x0, prox, f);
    rec.oracle_calls = budget.used();
    rec.elapsed_seconds = budget.elapsed();
    result.trace.push_back(rec);
    result.iterates.push_back(x0);

    for (int k = 0;; ++k) {
      if (result.trace.back().residual_norm <= cfg.stop.residual_tol) {
        result.reason = StopReason::kResidual;
        break;
      }
      if (auto reason = budget.exhausted(k)) {
        result.reason = *reason;
        break;
      }
      Point next = prox.y_bar;
      prox = solver(next, budget.clamp(cfg.budget.iterations_at(k + 1)));
      budget.spend(prox.inner_iterations);
      rec = make_record(k + 1, next, prox, f);
      rec.alpha = 1.0;
      rec.oracle_calls = budget.used();
      rec.elapsed_seconds = budget.elapsed();
      result.trace.push_back(rec);
      result.iterates.push_back(next);
      result.x = std::move(next);
    }
  } catch (const Error& e) {
    throw RunFailure(e, result.trace);
  }
  result.oracle_calls = budget.used();
  return result;
}

RunResult hippa_run(const Point& x0, const ObjectiveOracle& f, const HippaConfig& cfg) {
  return hippa_run(x0, f, cfg, sgdss_prox_solver(f, cfg.params));
}

BoostedStepResult boosted_hippa_step(const BoostedState& state, const ObjectiveOracle& f,
                                     const HippaConfig& cfg, int k, const ProxSolver& solver,
                                     long long* inner_budget_left) {
  const auto& params = cfg.params;
  const ProxApproximation& prox = state.prox;
  const Point& R = prox.residual;
  const double rn = R.norm();

  BoostedStepResult out;
  if (rn == 0.0) {
    out.next = state;
    out.record = make_record(k, state.x, prox, f);
    return out;
  }

  double sigma_k = cfg.spectral.sigma_0;
  if (state.prev_x && state.prev_residual) {
    sigma_k = spectral_sigma(state.x - *state.prev_x, R - *state.prev_residual, rn,
                             cfg.spectral);
  }
  const Point direction = -sigma_k * R;
  const Point extrapolated = state.x + direction;
  const double rhs = prox.envelope_value_inexact - params.sigma * std::pow(rn, params.p) +
                     cfg.schedule.epsilon(k) + cfg.schedule.epsilon(k + 1);
  const int inner = cfg.budget.iterations_at(k + 1);

  int spent = 0;
  auto solve = [&](const Point& at) -> std::optional<ProxApproximation> {
    int iters = inner;
    if (inner_budget_left) {
      iters = static_cast<int>(std::min<long long>(iters, *inner_budget_left));
      if (iters <= 0) return std::nullopt;
    }
    ProxApproximation cand = solver(at, iters);
    spent += cand.inner_iterations;
    if (inner_budget_left) *inner_budget_left -= cand.inner_iterations;
    return cand;
  };

  std::optional<ProxApproximation> accepted;
  Point x_next;
  int backtracks = 0;
  double alpha = 1.0;
  for (int m = 0; m < cfg.max_backtracks; ++m) {
    alpha = std::pow(params.theta_ls, m);
    Point candidate = (1.0 - alpha) * prox.y_bar + alpha * extrapolated;
    auto cand = solve(candidate);
    if (!cand) break;
    if (cand->envelope_value_inexact <= rhs) {
      accepted = std::move(cand);
      x_next = std::move(candidate);
      backtracks = m;
      break;
    }
    if (inner_budget_left && *inner_budget_left <= 0) break;
  }

  bool fallback = false;
  if (!accepted) {
    if (inner_budget_left && *inner_budget_left <= 0) {
      out.next = state;
      out.accepted = false;
      out.inner_spent = spent;
      return out;
    }
    // Line search exhausted: take the plain HiPPA point.
    x_next = prox.y_bar;
    accepted = solve(x_next);
    if (!accepted) {
      out.next = state;
      out.accepted = false;
      out.inner_spent = spent;
      return out;
    }
    fallback = true;
    backtracks = cfg.max_backtracks;
    alpha = 0.0;
  }

  out.record = make_record(k + 1, x_next, *accepted, f);
  out.record.backtracks = backtracks;
  out.record.alpha = alpha;
  out.record.sigma_k = sigma_k;
  out.record.fallback = fallback;
  out.record.inner_iterations = spent;
  out.inner_spent = spent;
  out.next.prev_x = state.x;
  out.next.prev_residual = R;
  out.next.x = std::move(x_next);
  out.next.prox = std::move(*accepted);
  return out;
}

RunResult boosted_hippa_run(const Point& x0, const ObjectiveOracle& f,
                            const HippaConfig& cfg, const ProxSolver& solver) {
  validate_config(cfg);
  require_dimension(x0, f.dimension(), "initial point");
  RunResult result;
  Budget budget(cfg.stop);
  result.x = x0;
  try {
    BoostedState state;
    state.x = x0;
    state.prox = solver(x0, budget.clamp(cfg.budget.iterations_at(0)));
    budget.spend(state.prox.inner_iterations);
    IterateTrace rec = make_record(0, x0, state.prox, f);
    rec.oracle_calls = budget.used();
    rec.elapsed_seconds = budget.elapsed();
    result.trace.push_back(rec);
    result.iterates.push_back(x0);

    for (int k = 0;; ++k) {
      if (result.trace.back().residual_norm <= cfg.stop.residual_tol) {
        result.reason = StopReason::kResidual;
        break;
      }
      if (auto reason = budget.exhausted(k)) {
        result.reason = *reason;
        break;
      }
      // The step decrements the shared oracle-call counter itself.
      auto step = boosted_hippa_step(state, f, cfg, k, solver, budget.calls_left());
      budget.note_used(step.inner_spent);
      if (!step.accepted) {
        result.reason = StopReason::kOracleCalls;
        break;
      }
      state = std::move(step.next);
      step.record.oracle_calls = budget.used();
      step.record.elapsed_seconds = budget.elapsed();
      if (step.record.fallback) ++result.fallbacks;
      result.trace.push_back(step.record);
      result.iterates.push_back(state.x);
      result.x = state.x;
    }
  } catch (const Error& e) {
    throw RunFailure(e, result.trace);
  }
  result.oracle_calls = budget.used();
  return result;
}

RunResult boosted_hippa_run(const Point& x0, const ObjectiveOracle& f,
                            const HippaConfig& cfg) {
  return boosted_hippa_run(x0, f, cfg, sgdss_prox_solver(f, cfg.params));
}

std::vector<double> descent_certificates(const std::vector<IterateTrace>& trace,
                                         const EnvelopeParams& params,
                                         const ErrorSchedule& schedule) {
  std::vector<double> slack;
  for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
    const auto& cur = trace[i];
    const auto& next = trace[i + 1];
    if (next.fallback) continue;
    const double rhs = cur.envelope_value_inexact -
                       params.sigma * std::pow(cur.residual_norm, params.p) +
                       schedule.epsilon(cur.k) + schedule.epsilon(next.k);
    slack.push_back(rhs - next.envelope_value_inexact);
  }
  return slack;
}

TelescopedBound telescoped_bound(const std::vector<IterateTrace>& trace,
                                 const EnvelopeParams& params, const ErrorSchedule& schedule,
                                 double f_low) {
  TelescopedBound bound;
  if (trace.empty()) return bound;
  for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
    bound.lhs += params.sigma * std::pow(trace[i].residual_norm, params.p);
  }
  bound.rhs = trace.front().envelope_value_inexact - f_low + 2.0 * schedule.sum();
  return bound;
}

std::vector<double> lyapunov_sequence(const std::vector<IterateTrace>& trace,
                                      const ErrorSchedule& schedule) {
  std::vector<double> out;
  out.reserve(trace.size());
  for (const auto& rec : trace) {
    out.push_back(rec.envelope_value_inexact + schedule.tail(rec.k) +
                  schedule.tail(rec.k + 1));
  }
  return out;
}

double iteration_bound(double envelope0, double f_low, const EnvelopeParams& params,
                       const ErrorSchedule& schedule, double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("iteration bound needs a positive tolerance");
  return std::ceil((envelope0 - f_low + 2.0 * schedule.sum()) /
                   (params.sigma * std::pow(tol, params.p)));
}

}  // namespace home
