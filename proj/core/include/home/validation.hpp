#pragma once

// Desk-scale checks of envelope theory against exhaustive grid oracles and
// randomized inequality sampling. Every check is deterministic given its
// inputs and reports its worst case together with the tolerance it used.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "home/envelope.hpp"
#include "home/inner_solvers.hpp"

namespace home {

struct TestFunction {
  std::string name;
  std::shared_ptr<const ObjectiveOracle> oracle;
  /// Exact prox / envelope for (x, p, gamma), when known.
  std::function<Point(const Point&, double, double)> closed_form_prox;
  std::function<double(const Point&, double, double)> closed_form_envelope;
  GridSpec domain;
  std::vector<Point> global_minimizers;
  std::optional<double> min_value;
};

/// f(x) = |x - 2| on [-3, 7].
TestFunction abs_shift_function(int points = 10001);
/// f(x) = x^2 / 2 on [-5, 5].
TestFunction half_square_function(int points = 10001);
/// f(x) = x^4 - x^2 on [-2, 2]; minimizers +-1/sqrt(2), minimum -1/4.
TestFunction quartic_function(int points = 7001);
/// f(x) = c on [-2, 2].
TestFunction constant_function(double c, int points = 2001);

struct CheckReport {
  std::string name;
  bool passed = true;
  bool skipped = false;
  long long samples = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  /// Worst-case offenders, formatted for reproduction.
  std::vector<std::string> witnesses;
  std::vector<std::string> notes;

  void record(double violation, const std::string& witness);
};

std::string to_json(const CheckReport& report);
std::string to_json(const std::vector<CheckReport>& reports);

/// M_{g2}(x) <= M_{g1}(x) <= f(x) for consecutive g1 < g2 at every grid x,
/// with grid envelopes over `grid` (default: the function's domain).
CheckReport check_envelope_bounds(const TestFunction& tf, const std::vector<double>& gammas,
                                  double p, const std::optional<GridSpec>& grid = std::nullopt);

/// Whether {x on the domain grid : M_gamma(x) <= level} lies inside the
/// closed ball around `center`.
bool check_sublevel_inclusion(const TestFunction& tf, double p, double gamma, double level,
                              const Point& center, double radius);

/// Each known global minimizer is reproduced by the grid prox, and the grid
/// minimum of the envelope equals the grid minimum of f.
CheckReport check_fixed_point_chain(const TestFunction& tf, double p, double gamma);

/// home_gradient (with the grid prox) against central differences of the
/// grid envelope. Samples are snapped to the grid; samples with a
/// multivalued grid prox are skipped and noted.
CheckReport check_gradient_formula(const TestFunction& tf, double p, double gamma,
                                   const std::vector<Point>& samples);

/// Randomized checks of the power-function and duality-map inequalities
/// used by the convergence analysis. One report per inequality and
/// configuration.
std::vector<CheckReport> check_inequality_suites(std::uint64_t seed, int trials);

/// Everything above with the standard configurations; used by `home validate`.
std::vector<CheckReport> run_validation_suite(std::uint64_t seed, int trials = 1000);

}  // namespace home
