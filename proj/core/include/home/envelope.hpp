#pragma once

// High-order Moreau envelope (HOME) and high-order proximal operator (HOPE)
// primitives:
//
//   M_gamma(x)    = inf_y  f(y) + 1/(p*gamma) * ||x - y||^p
//   prox_gamma(x) = argmin of the same problem
//
// Everything here is a pure function of its inputs. Norms are Euclidean;
// matrix-valued problems are flattened to a Point before they get here.

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <optional>
#include <utility>

#include "home/errors.hpp"

namespace home {

using Point = Eigen::VectorXd;

/// Nonsmooth objective: value and one (limiting) subgradient at any point.
class ObjectiveOracle {
 public:
  virtual ~ObjectiveOracle() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual double value(const Point& x) const = 0;
  virtual Point subgradient(const Point& x) const = 0;

  /// Value and subgradient together. Oracles whose two halves share work
  /// (the matrix-recovery losses) override this.
  virtual std::pair<double, Point> evaluate(const Point& x) const {
    return {value(x), subgradient(x)};
  }

  /// A known lower bound of the objective, when one is available.
  virtual std::optional<double> lower_bound_hint() const {
    return std::nullopt;
  }
};

/// Oracle assembled from callables; handy for small analytic test functions.
class FunctionOracle final : public ObjectiveOracle {
 public:
  using ValueFn = std::function<double(const Point&)>;
  using SubgradientFn = std::function<Point(const Point&)>;

  FunctionOracle(Eigen::Index dimension, ValueFn value, SubgradientFn subgradient,
                 std::optional<double> lower_bound = std::nullopt);

  Eigen::Index dimension() const override { return dimension_; }
  double value(const Point& x) const override;
  Point subgradient(const Point& x) const override;
  std::optional<double> lower_bound_hint() const override { return lower_bound_; }

 private:
  Eigen::Index dimension_;
  ValueFn value_;
  SubgradientFn subgradient_;
  std::optional<double> lower_bound_;
};

/// (p, gamma) of the envelope plus the Boosted HiPPA descent coefficient
/// sigma and backtracking factor theta.
struct EnvelopeParams {
  double p = 2.0;
  double gamma = 1.0;
  double sigma = 1.0 / 2.2;
  double theta_ls = 0.8;

  /// Validated construction; sigma defaults to 1/(1.1 p gamma).
  static EnvelopeParams make(double p, double gamma, double theta_ls = 0.8,
                             std::optional<double> sigma = std::nullopt);

  static double default_sigma(double p, double gamma) {
    return 1.0 / (1.1 * p * gamma);
  }

  /// Throws InvalidArgument naming the first violated constraint.
  void validate() const;
};

/// Result of an (inexact) prox solve at `anchor`.
struct ProxApproximation {
  Point anchor;
  Point y_bar;
  double envelope_value_inexact = 0.0;
  /// f(y_bar), kept so callers do not re-query the oracle.
  double objective_at_y_bar = 0.0;
  Point residual;
  double epsilon_used = 0.0;
  int inner_iterations = 0;
  double inner_final_step = 0.0;
};

/// Packages a prox point, recomputing the envelope value and residual from
/// (anchor, y_bar) so the result never depends on solver bookkeeping.
ProxApproximation make_prox_approximation(const Point& anchor, const Point& y_bar,
                                          const ObjectiveOracle& f,
                                          const EnvelopeParams& params,
                                          int inner_iterations = 0,
                                          double inner_final_step = 0.0,
                                          double epsilon_used = 0.0);

/// 1/(p*gamma) * ||d||^p.
double regularizer_value(const Point& d, const EnvelopeParams& params);

/// Gradient of y -> 1/(p*gamma)||y - x||^p at y, i.e.
/// (1/gamma)||y - x||^{p-2}(y - x), zero at y == x for every p > 1.
Point regularizer_gradient(const Point& y, const Point& x, const EnvelopeParams& params);

/// f(y) + 1/(p*gamma) * ||x - y||^p.
double subproblem_value(const Point& y, const Point& x, const ObjectiveOracle& f,
                        const EnvelopeParams& params);

/// (1/gamma) * ||r||^{p-2} * r with r = anchor - y_bar; 0 when r == 0.
Point home_gradient(const ProxApproximation& prox, const EnvelopeParams& params);

/// ||anchor - y_bar||.
double residual_norm(const ProxApproximation& prox);

/// ||a||^{p-2} a with the 0/0 = 0 convention at a == 0.
Point duality_map(const Point& a, double p);

/// Crossover point of the two branches of kappa, solved by bisection once
/// per process and checked to lie in [1.321, 1.322].
double kappa_threshold();

/// Monotonicity constant of a -> ||a||^{t-2} a on balls, t in (1, 2].
double kappa(double t);

/// Throws InvalidArgument unless both points have `expected` entries.
void require_dimension(const Point& x, Eigen::Index expected, const char* what);

/// Throws OracleFailure when `value` is NaN or infinite.
double require_finite(double value, const char* what);

}  // namespace home
