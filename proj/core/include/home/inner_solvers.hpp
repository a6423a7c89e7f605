#pragma once

// Lower-level solvers for the HOPE subproblem
//
//   min_y  f(y) + 1/(p*gamma) * ||x - y||^p
//
// plus plain subgradient methods on f itself (used as outer baselines), and
// an exhaustive grid oracle for one- and two-dimensional validation.

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "home/envelope.hpp"

namespace home {

/// Geometrically decaying steps alpha_i = lambda * q^i.
struct SgdssSchedule {
  double lambda = 1.0;
  double q = 0.93;
  int max_iterations = 300;

  double step(int i) const;
  void validate() const;
};

/// Inner iteration count I_k as a function of the outer iteration k.
/// Piecewise constant: I_k is the count of the last breakpoint whose start
/// is <= k.
class InnerBudgetSchedule {
 public:
  struct Breakpoint {
    int first_k;
    int iterations;
  };

  /// I_k = 50 for k <= 2, 300 for 3 <= k < 20, 500 for 20 <= k < 30 and
  /// 800 from k = 30 on.
  InnerBudgetSchedule();
  explicit InnerBudgetSchedule(std::vector<Breakpoint> breakpoints);

  static InnerBudgetSchedule constant(int iterations);

  int iterations_at(int k) const;

 private:
  std::vector<Breakpoint> breakpoints_;
};

struct ConstantStep {
  double alpha;
};
struct GeometricStep {
  double lambda;
  double q;
};
/// Polyak step (F(y) - f_low)/||g||^2 clamped to [0, 1e6].
struct PolyakStep {
  double f_low = 0.0;
};
using StepRule = std::variant<ConstantStep, GeometricStep, PolyakStep>;

/// Outcome of a raw subgradient run. `best` is the best iterate seen.
struct SubgradientResult {
  Point best;
  double best_value = 0.0;
  Point last;
  double last_value = 0.0;
  int iterations = 0;
  double final_step = 0.0;
  bool stopped_at_zero_subgradient = false;
  bool stopped_by_observer = false;
};

/// Called before each step with (iteration index, iterate, value at the
/// iterate, step length about to be used). Returning false ends the run at
/// that iterate.
using SubgradientObserver =
    std::function<bool(int, const Point&, double, double)>;

/// Subgradient method y <- y - step * g on f (anchor == nullopt) or on the
/// HOPE subproblem anchored at *anchor. Returns the best-seen iterate.
/// A zero subgradient ends the run at the current iterate.
SubgradientResult run_subgradient_method(const ObjectiveOracle& f, const Point& start,
                                         const StepRule& rule, int iterations,
                                         const std::optional<Point>& anchor = std::nullopt,
                                         const EnvelopeParams* params = nullptr,
                                         const SubgradientObserver& observer = {});

/// Inexact prox by SG-DSS, warm-started at `warm_start` (default: x).
ProxApproximation solve_prox_sgdss(const Point& x, const ObjectiveOracle& f,
                                   const EnvelopeParams& params,
                                   const SgdssSchedule& schedule,
                                   const std::optional<Point>& warm_start = std::nullopt);

/// Inexact prox with a constant or Polyak step rule.
using BaselineRule = std::variant<ConstantStep, PolyakStep>;
ProxApproximation solve_prox_baseline(const Point& x, const ObjectiveOracle& f,
                                      const EnvelopeParams& params,
                                      const BaselineRule& method, int iterations,
                                      const std::optional<Point>& warm_start = std::nullopt);

/// Tensor grid over a box in one or two dimensions.
struct GridSpec {
  Point lower;
  Point upper;
  int points_per_axis = 1001;

  static constexpr long long kMaxCells = 10'000'000;

  static GridSpec interval(double lower, double upper, int points);
  static GridSpec box(const Point& lower, const Point& upper, int points_per_axis);

  Eigen::Index dimension() const { return lower.size(); }
  long long size() const;
  double cell(Eigen::Index axis) const;
  double cell_diagonal() const;
  Point at(long long flat_index) const;
  void validate() const;
};

struct BruteForceProx {
  /// Grid points within `slack` of the grid minimum, in grid order. The
  /// slack is the smallest increase from the minimizer to a grid neighbour.
  std::vector<Point> minimizers;
  /// Connected runs of `minimizers` on the grid (adjacent cells merged).
  std::vector<std::vector<Point>> clusters;
  /// Grid point attaining the minimum (first in grid order on ties).
  Point argmin;
  /// Grid estimate of M_gamma(x).
  double value = 0.0;
  double slack = 0.0;
  /// Width of the widest cluster in grid cells.
  double max_cluster_span_cells = 0.0;

  /// More than one cluster, or one cluster spanning more than three cells.
  bool multivalued() const;
};

/// Objective values cached on a fixed grid, reused across many anchors.
class GridEnvelope {
 public:
  GridEnvelope(const ObjectiveOracle& f, GridSpec grid);

  const GridSpec& grid() const { return grid_; }
  double objective_at(long long flat_index) const { return values_[flat_index]; }

  BruteForceProx prox(const Point& x, const EnvelopeParams& params) const;
  /// Grid envelope value only; cheaper than prox().
  double envelope(const Point& x, const EnvelopeParams& params) const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

/// Exhaustive grid evaluation of the subproblem. Throws ResourceLimit when
/// the grid exceeds GridSpec::kMaxCells.
BruteForceProx brute_force_prox(const Point& x, const ObjectiveOracle& f,
                                const EnvelopeParams& params, const GridSpec& grid);

}  // namespace home
