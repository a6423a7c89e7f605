#include "home/envelope.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace home {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid-argument";
    case ErrorCode::kOracleFailure:
      return "oracle-failure";
    case ErrorCode::kSolverDiverged:
      return "solver-diverged";
    case ErrorCode::kResourceLimit:
      return "resource-limit";
    case ErrorCode::kIoFailure:
      return "io-failure";
  }
  return "unknown";
}

FunctionOracle::FunctionOracle(Eigen::Index dimension, ValueFn value,
                               SubgradientFn subgradient,
                               std::optional<double> lower_bound)
    : dimension_(dimension),
      value_(std::move(value)),
      subgradient_(std::move(subgradient)),
      lower_bound_(lower_bound) {
  if (dimension_ <= 0) throw InvalidArgument("oracle dimension must be positive");
}

double FunctionOracle::value(const Point& x) const {
  require_dimension(x, dimension_, "oracle argument");
  return value_(x);
}

Point FunctionOracle::subgradient(const Point& x) const {
  require_dimension(x, dimension_, "oracle argument");
  Point g = subgradient_(x);
  require_dimension(g, dimension_, "oracle subgradient");
  return g;
}

EnvelopeParams EnvelopeParams::make(double p, double gamma, double theta_ls,
                                    std::optional<double> sigma) {
  EnvelopeParams params;
  params.p = p;
  params.gamma = gamma;
  params.theta_ls = theta_ls;
  params.sigma = sigma.value_or(p > 0 && gamma > 0 ? default_sigma(p, gamma) : 0.0);
  params.validate();
  return params;
}

void EnvelopeParams::validate() const {
  if (!(std::isfinite(p) && p > 1.0)) throw InvalidArgument("p must be > 1");
  if (!(std::isfinite(gamma) && gamma > 0.0)) throw InvalidArgument("gamma must be > 0");
  if (!(theta_ls > 0.0 && theta_ls < 1.0)) {
    throw InvalidArgument("theta must lie in (0, 1)");
  }
  if (!(sigma > 0.0 && sigma < 1.0 / (p * gamma))) {
    throw InvalidArgument("sigma must lie in (0, 1/(p*gamma))");
  }
}

void require_dimension(const Point& x, Eigen::Index expected, const char* what) {
  if (x.size() != expected) {
    std::ostringstream os;
    os << what << ": dimension " << x.size() << " does not match " << expected;
    throw InvalidArgument(os.str());
  }
}

double require_finite(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw OracleFailure(std::string(what) + " returned a non-finite value");
  }
  return value;
}

double regularizer_value(const Point& d, const EnvelopeParams& params) {
  return std::pow(d.norm(), params.p) / (params.p * params.gamma);
}

Point duality_map(const Point& a, double p) {
  const double n = a.norm();
  if (n == 0.0) return Point::Zero(a.size());
  return std::pow(n, p - 2.0) * a;
}

Point regularizer_gradient(const Point& y, const Point& x, const EnvelopeParams& params) {
  return duality_map(y - x, params.p) / params.gamma;
}

double subproblem_value(const Point& y, const Point& x, const ObjectiveOracle& f,
                        const EnvelopeParams& params) {
  require_dimension(y, f.dimension(), "subproblem point");
  require_dimension(x, f.dimension(), "subproblem anchor");
  const double fy = require_finite(f.value(y), "objective oracle");
  return fy + regularizer_value(x - y, params);
}

ProxApproximation make_prox_approximation(const Point& anchor, const Point& y_bar,
                                          const ObjectiveOracle& f,
                                          const EnvelopeParams& params,
                                          int inner_iterations, double inner_final_step,
                                          double epsilon_used) {
  require_dimension(anchor, f.dimension(), "prox anchor");
  require_dimension(y_bar, f.dimension(), "prox point");
  ProxApproximation prox;
  prox.anchor = anchor;
  prox.y_bar = y_bar;
  prox.residual = anchor - y_bar;
  prox.objective_at_y_bar = require_finite(f.value(y_bar), "objective oracle");
  prox.envelope_value_inexact =
      prox.objective_at_y_bar + regularizer_value(prox.residual, params);
  prox.inner_iterations = inner_iterations;
  prox.inner_final_step = inner_final_step;
  prox.epsilon_used = epsilon_used;
  return prox;
}

Point home_gradient(const ProxApproximation& prox, const EnvelopeParams& params) {
  return duality_map(prox.residual, params.p) / params.gamma;
}

double residual_norm(const ProxApproximation& prox) { return prox.residual.norm(); }

namespace {

const double kSqrt3 = std::sqrt(3.0);

// h1(t) - h3(t): the two competing lower bounds whose crossing defines the
// branch point of kappa.
double branch_gap(double t) {
  const double h1 = t * (t - 1.0) / 2.0;
  const double h3 = 1.0 - std::pow(1.0 + (2.0 - kSqrt3) * t / (t - 1.0), 1.0 - t);
  return h1 - h3;
}

double solve_threshold() {
  double lo = 1.1;  // gap < 0
  double hi = 2.0;  // gap > 0
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (branch_gap(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double t = 0.5 * (lo + hi);
  if (!(t >= 1.321 && t <= 1.322)) {
    throw std::logic_error("kappa threshold bisection left [1.321, 1.322]");
  }
  return t;
}

}  // namespace

double kappa_threshold() {
  static const double threshold = solve_threshold();
  return threshold;
}

double kappa(double t) {
  if (!(t > 1.0 && t <= 2.0)) throw InvalidArgument("kappa: t must lie in (1, 2]");
  if (t == 2.0) return 1.0;
  const double c = (2.0 + kSqrt3) / 16.0;
  if (t <= kappa_threshold()) return c * (t - 1.0);
  return c * (1.0 - std::pow(3.0 - kSqrt3, 1.0 - t));
}

}  // namespace home
