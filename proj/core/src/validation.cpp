#include "home/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "home/csv.hpp"
#include "home/random.hpp"

namespace home {

namespace {

Point scalar(double v) {
  Point x(1);
  x(0) = v;
  return x;
}

std::string format_point(const Point& x) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_double(x(i));
  }
  return out + "]";
}

constexpr std::size_t kMaxWitnesses = 5;

// Grid envelope at every grid point. On 1D grids the regularizer depends on
// the index offset only, so it is tabulated once.
std::vector<double> envelope_on_grid(const GridEnvelope& env, const EnvelopeParams& params) {
  const GridSpec& grid = env.grid();
  const long long n = grid.size();
  std::vector<double> out(static_cast<std::size_t>(n));
  if (grid.dimension() == 1) {
    const double h = grid.cell(0);
    std::vector<double> reg(static_cast<std::size_t>(n));
    for (long long d = 0; d < n; ++d) {
      reg[d] = std::pow(static_cast<double>(d) * h, params.p) / (params.p * params.gamma);
    }
    for (long long i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (long long j = 0; j < n; ++j) {
        best = std::min(best, env.objective_at(j) + reg[std::llabs(i - j)]);
      }
      out[i] = best;
    }
  } else {
    for (long long i = 0; i < n; ++i) out[i] = env.envelope(grid.at(i), params);
  }
  return out;
}

// Nearest grid point, clamped to the box.
Point snap(const GridSpec& grid, const Point& x) {
  Point s(x.size());
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    const double h = grid.cell(a);
    double idx = std::round((x(a) - grid.lower(a)) / h);
    idx = std::clamp(idx, 0.0, static_cast<double>(grid.points_per_axis - 1));
    s(a) = grid.lower(a) + (grid.upper(a) - grid.lower(a)) * idx / (grid.points_per_axis - 1);
  }
  return s;
}

bool inside(const GridSpec& grid, const Point& x) {
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    if (x(a) < grid.lower(a) - 1e-12 || x(a) > grid.upper(a) + 1e-12) return false;
  }
  return true;
}

double local_lipschitz(const GridEnvelope& env) {
  const GridSpec& grid = env.grid();
  double worst = 0.0;
  if (grid.dimension() == 1) {
    for (long long i = 1; i < grid.size(); ++i) {
      worst = std::max(worst, std::abs(env.objective_at(i) - env.objective_at(i - 1)) /
                                  grid.cell(0));
    }
  }
  return worst;
}

}  // namespace

void CheckReport::record(double violation, const std::string& witness) {
  ++samples;
  if (violation > tolerance) {
    passed = false;
    if (witnesses.size() < kMaxWitnesses) witnesses.push_back(witness);
  }
  max_violation = std::max(max_violation, violation);
}

std::string to_json(const CheckReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["passed"] = r.passed;
  j["skipped"] = r.skipped;
  j["samples"] = r.samples;
  j["max_violation"] = r.max_violation;
  j["tolerance"] = r.tolerance;
  j["witnesses"] = r.witnesses;
  j["notes"] = r.notes;
  return j.dump(2);
}

std::string to_json(const std::vector<CheckReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  bool all = true;
  for (const auto& r : reports) {
    arr.push_back(nlohmann::json::parse(to_json(r)));
    all = all && r.passed;
  }
  nlohmann::json j;
  j["passed"] = all;
  j["checks"] = std::move(arr);
  return j.dump(2);
}

TestFunction abs_shift_function(int points) {
  TestFunction tf;
  tf.name = "abs(x-2)";
  tf.oracle = std::make_shared<FunctionOracle>(
      1, [](const Point& x) { return std::abs(x(0) - 2.0); },
      [](const Point& x) {
        const double d = x(0) - 2.0;
        return scalar(d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0));
      },
      0.0);
  // Moving from x towards 2 costs 1 per unit and saves s^{p-1}/gamma, so the
  // prox stops at distance s = gamma^{1/(p-1)} from x unless it reaches 2.
  tf.closed_form_prox = [](const Point& x, double p, double gamma) {
    const double d = x(0) - 2.0;
    const double s = std::pow(gamma, 1.0 / (p - 1.0));
    if (std::abs(d) <= s) return scalar(2.0);
    return scalar(x(0) - std::copysign(s, d));
  };
  tf.closed_form_envelope = [](const Point& x, double p, double gamma) {
    const double d = std::abs(x(0) - 2.0);
    const double s = std::pow(gamma, 1.0 / (p - 1.0));
    if (d <= s) return std::pow(d, p) / (p * gamma);
    return d - s + std::pow(s, p) / (p * gamma);
  };
  tf.domain = GridSpec::interval(-3.0, 7.0, points);
  tf.global_minimizers = {scalar(2.0)};
  tf.min_value = 0.0;
  return tf;
}

TestFunction half_square_function(int points) {
  TestFunction tf;
  tf.name = "x^2/2";
  tf.oracle = std::make_shared<FunctionOracle>(
      1, [](const Point& x) { return 0.5 * x(0) * x(0); },
      [](const Point& x) { return scalar(x(0)); }, 0.0);
  tf.closed_form_prox = [](const Point& x, double p, double gamma) {
    if (p != 2.0) throw InvalidArgument("closed-form prox of x^2/2 is implemented for p = 2");
    return scalar(x(0) / (1.0 + gamma));
  };
  tf.closed_form_envelope = [](const Point& x, double p, double gamma) {
    if (p != 2.0) throw InvalidArgument("closed-form envelope of x^2/2 is implemented for p = 2");
    return x(0) * x(0) / (2.0 * (1.0 + gamma));
  };
  tf.domain = GridSpec::interval(-5.0, 5.0, points);
  tf.global_minimizers = {scalar(0.0)};
  tf.min_value = 0.0;
  return tf;
}

TestFunction quartic_function(int points) {
  TestFunction tf;
  tf.name = "x^4-x^2";
  tf.oracle = std::make_shared<FunctionOracle>(
      1,
      [](const Point& x) {
        const double t = x(0) * x(0);
        return t * t - t;
      },
      [](const Point& x) { return scalar(4.0 * x(0) * x(0) * x(0) - 2.0 * x(0)); }, -0.25);
  tf.domain = GridSpec::interval(-2.0, 2.0, points);
  const double m = 1.0 / std::sqrt(2.0);
  tf.global_minimizers = {scalar(-m), scalar(m)};
  tf.min_value = -0.25;
  return tf;
}

TestFunction constant_function(double c, int points) {
  TestFunction tf;
  tf.name = "constant";
  tf.oracle = std::make_shared<FunctionOracle>(
      1, [c](const Point&) { return c; }, [](const Point&) { return scalar(0.0); }, c);
  tf.closed_form_prox = [](const Point& x, double, double) { return x; };
  tf.closed_form_envelope = [c](const Point&, double, double) { return c; };
  tf.domain = GridSpec::interval(-2.0, 2.0, points);
  tf.global_minimizers = {scalar(0.0)};
  tf.min_value = c;
  return tf;
}

CheckReport check_envelope_bounds(const TestFunction& tf, const std::vector<double>& gammas,
                                  double p, const std::optional<GridSpec>& grid) {
  CheckReport report;
  report.name = "envelope-bounds " + tf.name + " p=" + format_double(p);
  for (std::size_t i = 1; i < gammas.size(); ++i) {
    if (!(gammas[i] > gammas[i - 1])) {
      throw InvalidArgument("gammas must be strictly increasing");
    }
  }
  const GridEnvelope env(*tf.oracle, grid.value_or(tf.domain));
  const GridSpec& g = env.grid();

  double fmax = 0.0;
  for (long long i = 0; i < g.size(); ++i) fmax = std::max(fmax, std::abs(env.objective_at(i)));
  // Both inequalities are exact on a shared grid; only rounding remains.
  report.tolerance = 1e-12 * std::max(1.0, fmax);
  report.notes.push_back("grid points: " + std::to_string(g.size()) +
                         ", cell: " + format_double(g.cell_diagonal()));

  std::vector<double> previous;
  double previous_gamma = 0.0;
  for (double gamma : gammas) {
    const auto params = EnvelopeParams::make(p, gamma);
    std::vector<double> current = envelope_on_grid(env, params);
    for (long long i = 0; i < g.size(); ++i) {
      const double f = env.objective_at(i);
      report.record(current[i] - f, "x=" + format_point(g.at(i)) + " gamma=" +
                                        format_double(gamma) + " M=" +
                                        format_double(current[i]) + " f=" + format_double(f));
      if (!previous.empty()) {
        report.record(current[i] - previous[i],
                      "x=" + format_point(g.at(i)) + " gamma " + format_double(previous_gamma) +
                          " -> " + format_double(gamma) + ": " + format_double(previous[i]) +
                          " -> " + format_double(current[i]));
      }
    }
    previous = std::move(current);
    previous_gamma = gamma;
  }
  return report;
}

bool check_sublevel_inclusion(const TestFunction& tf, double p, double gamma, double level,
                              const Point& center, double radius) {
  const GridEnvelope env(*tf.oracle, tf.domain);
  const auto params = EnvelopeParams::make(p, gamma);
  const std::vector<double> values = envelope_on_grid(env, params);
  for (long long i = 0; i < env.grid().size(); ++i) {
    if (values[i] <= level && (env.grid().at(i) - center).norm() > radius) return false;
  }
  return true;
}

CheckReport check_fixed_point_chain(const TestFunction& tf, double p, double gamma) {
  CheckReport report;
  report.name = "fixed-point-chain " + tf.name + " p=" + format_double(p) +
                " gamma=" + format_double(gamma);
  if (tf.global_minimizers.empty()) {
    throw InvalidArgument("fixed-point check needs known global minimizers");
  }
  const GridEnvelope env(*tf.oracle, tf.domain);
  const GridSpec& g = env.grid();
  const auto params = EnvelopeParams::make(p, gamma);
  report.tolerance = 2.0 * g.cell_diagonal();

  for (const Point& xs : tf.global_minimizers) {
    const BruteForceProx bf = env.prox(xs, params);
    double worst = 0.0;
    for (const Point& y : bf.minimizers) worst = std::max(worst, (y - xs).norm());
    report.record(worst, "prox(" + format_point(xs) + ") strays " + format_double(worst) +
                             " over " + std::to_string(bf.minimizers.size()) + " minimizers");
  }

  // On a shared grid min M <= min f (take y = x) and M >= min f termwise,
  // so the two minima coincide exactly.
  const std::vector<double> values = envelope_on_grid(env, params);
  double min_f = std::numeric_limits<double>::infinity();
  double min_m = std::numeric_limits<double>::infinity();
  for (long long i = 0; i < g.size(); ++i) {
    min_f = std::min(min_f, env.objective_at(i));
    min_m = std::min(min_m, values[i]);
  }
  report.record(std::abs(min_f - min_m),
                "min M=" + format_double(min_m) + " min f=" + format_double(min_f));
  report.notes.push_back("grid min f: " + format_double(min_f));
  report.notes.push_back("grid min M: " + format_double(min_m));
  return report;
}

CheckReport check_gradient_formula(const TestFunction& tf, double p, double gamma,
                                   const std::vector<Point>& samples) {
  CheckReport report;
  report.name = "gradient-formula " + tf.name + " p=" + format_double(p) +
                " gamma=" + format_double(gamma);
  report.tolerance = 1e-4;
  const GridEnvelope env(*tf.oracle, tf.domain);
  const GridSpec& g = env.grid();
  const auto params = EnvelopeParams::make(p, gamma);
  report.notes.push_back("objective Lipschitz bound on grid: " +
                         format_double(local_lipschitz(env)));

  int skipped = 0;
  for (const Point& raw : samples) {
    const Point x = snap(g, raw);
    const BruteForceProx bf = env.prox(x, params);
    if (bf.multivalued()) {
      ++skipped;
      report.notes.push_back("prox multivalued at x=" + format_point(x) + " (" +
                             std::to_string(bf.clusters.size()) +
                             " clusters): envelope not differentiable there, skipped");
      continue;
    }
    const ProxApproximation prox = make_prox_approximation(x, bf.argmin, *tf.oracle, params);
    const Point analytic = home_gradient(prox, params);

    Point fd(x.size());
    bool ok = true;
    for (Eigen::Index a = 0; a < x.size(); ++a) {
      const double h = g.cell(a);
      Point xp = x, xm = x;
      xp(a) += h;
      xm(a) -= h;
      if (!inside(g, xp) || !inside(g, xm)) {
        ok = false;
        break;
      }
      fd(a) = (env.envelope(xp, params) - env.envelope(xm, params)) / (2.0 * h);
    }
    if (!ok) {
      ++skipped;
      report.notes.push_back("sample " + format_point(x) + " too close to the grid edge, skipped");
      continue;
    }
    const double diff = (analytic - fd).norm();
    const double rel = diff == 0.0 ? 0.0 : diff / std::max(fd.norm(), 1e-12);
    report.record(rel, "x=" + format_point(x) + " analytic=" + format_point(analytic) +
                           " finite-difference=" + format_point(fd));
  }
  if (skipped > 0 && report.samples == 0) report.skipped = true;
  return report;
}

namespace {

Point random_vector(Rng& rng, int n, double scale) {
  Point a(n);
  for (int i = 0; i < n; ++i) a(i) = scale * rng.normal();
  return a;
}

// Uniform in the closed ball of radius r.
Point random_in_ball(Rng& rng, int n, double r) {
  Point d = random_vector(rng, n, 1.0);
  const double norm = d.norm();
  if (norm == 0.0) return Point::Zero(n);
  return d * (r * std::pow(rng.uniform(), 1.0 / n) / norm);
}

double log_uniform_scale(Rng& rng) { return std::pow(10.0, -2.0 + 3.0 * rng.uniform()); }

double pw(const Point& a, double p) { return std::pow(a.norm(), p); }

// ||a-b||^{p-2} (a-b) inner b, with the zero convention at a == b.
double weighted_inner(const Point& a, const Point& b, double p) {
  return duality_map(a - b, p).dot(b);
}

double slack_tol(double lhs, double rhs) {
  return 1e-12 * std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

std::string pair_witness(const Point& a, const Point& b, double lhs, double rhs) {
  return "a=" + format_point(a) + " b=" + format_point(b) + " lhs=" + format_double(lhs) +
         " rhs=" + format_double(rhs);
}

// Records lhs <= rhs with relative arithmetic slack folded into the violation.
void expect_le(CheckReport& r, double lhs, double rhs, const std::string& witness) {
  r.record(lhs - rhs - slack_tol(lhs, rhs), witness);
}

}  // namespace

std::vector<CheckReport> check_inequality_suites(std::uint64_t seed, int trials) {
  if (trials < 0) throw InvalidArgument("trials must be >= 0");
  std::vector<CheckReport> out;
  std::uint64_t stream = 0;

  auto begin = [&](const std::string& name, double p) {
    CheckReport r;
    r.name = name + " p=" + format_double(p);
    r.tolerance = 0.0;
    r.notes.push_back("violations are measured beyond 1e-12 relative slack");
    return r;
  };

  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    CheckReport r = begin("power-split-lower-bound", p);
    Rng rng(derive_seed(seed, ++stream));
    for (int t = 0; t < trials; ++t) {
      const int n = 1 + t % 3;
      const Point a = random_vector(rng, n, log_uniform_scale(rng));
      const Point b = random_vector(rng, n, log_uniform_scale(rng));
      const double lam = 0.01 + 0.98 * rng.uniform();
      const double lhs = pw(a + b, p);
      const double rhs = std::pow(lam, p - 1.0) * pw(a, p) -
                         std::pow(lam / (1.0 - lam), p - 1.0) * pw(b, p);
      expect_le(r, rhs, lhs, pair_witness(a, b, lhs, rhs) + " lambda=" + format_double(lam));
    }
    out.push_back(std::move(r));
  }

  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    CheckReport r = begin("power-difference-upper-bound", p);
    Rng rng(derive_seed(seed, ++stream));
    for (int t = 0; t < trials; ++t) {
      const int n = 1 + t % 3;
      const Point a = random_vector(rng, n, log_uniform_scale(rng));
      const Point b = random_vector(rng, n, log_uniform_scale(rng));
      const double lhs = pw(a - b, p);
      const double rhs = std::pow(2.0, p - 1.0) * (pw(a, p) + pw(b, p));
      expect_le(r, lhs, rhs, pair_witness(a, b, lhs, rhs));
    }
    out.push_back(std::move(r));
  }

  for (double p : {1.5, 2.0, 3.0}) {
    CheckReport r = begin("power-three-point-bound", p);
    Rng rng(derive_seed(seed, ++stream));
    for (int t = 0; t < trials; ++t) {
      const int n = 1 + t % 3;
      const Point a = random_vector(rng, n, log_uniform_scale(rng));
      const Point b = random_vector(rng, n, log_uniform_scale(rng));
      const double lhs = pw(a - b, p);
      const double rhs = pw(a, p) - p * weighted_inner(a, b, p);
      expect_le(r, lhs, rhs, pair_witness(a, b, lhs, rhs));
    }
    out.push_back(std::move(r));
  }

  // Stated for p >= 2 only; p = 1.5 admits counterexamples.
  for (double p : {2.0, 3.0}) {
    CheckReport r = begin("duality-map-uniform-monotonicity", p);
    Rng rng(derive_seed(seed, ++stream));
    for (int t = 0; t < trials; ++t) {
      const int n = 1 + t % 3;
      const Point a = random_vector(rng, n, log_uniform_scale(rng));
      const Point b = t == 0 ? a : random_vector(rng, n, log_uniform_scale(rng));
      const double lhs = (duality_map(a, p) - duality_map(b, p)).dot(a - b);
      const double rhs = std::pow(0.5, p - 2.0) * pw(a - b, p);
      expect_le(r, rhs, lhs, pair_witness(a, b, lhs, rhs));
    }
    out.push_back(std::move(r));
  }

  for (double p : {1.1, 1.5, 2.0}) {
    for (double radius : {0.5, 1.0, 3.0}) {
      CheckReport r = begin("duality-map-local-strong-monotonicity", p);
      r.name += " r=" + format_double(radius);
      Rng rng(derive_seed(seed, ++stream));
      const double k = kappa(p);
      for (int t = 0; t < trials; ++t) {
        const int n = 1 + t % 3;
        const Point a = random_in_ball(rng, n, radius);
        const Point b = random_in_ball(rng, n, radius);
        const double lhs = (duality_map(a, p) - duality_map(b, p)).dot(a - b);
        const double rhs = k * std::pow(radius, p - 2.0) * (a - b).squaredNorm();
        expect_le(r, rhs, lhs, pair_witness(a, b, lhs, rhs));
      }
      out.push_back(std::move(r));
    }
  }

  for (double p : {2.0, 3.0, 4.0}) {
    for (double radius : {0.5, 1.0, 3.0}) {
      CheckReport r = begin("duality-map-local-lipschitz", p);
      r.name += " r=" + format_double(radius);
      Rng rng(derive_seed(seed, ++stream));
      const double ks = kappa(p / (p - 1.0));
      for (int t = 0; t < trials; ++t) {
        const int n = 1 + t % 3;
        const Point a = random_in_ball(rng, n, radius);
        const Point b = random_in_ball(rng, n, radius);
        const double lhs = (duality_map(a, p) - duality_map(b, p)).norm();
        const double rhs = 2.0 * std::pow(radius, p - 2.0) / ks * (a - b).norm();
        expect_le(r, lhs, rhs, pair_witness(a, b, lhs, rhs));
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<CheckReport> run_validation_suite(std::uint64_t seed, int trials) {
  std::vector<CheckReport> out = check_inequality_suites(seed, trials);

  const TestFunction abs_fn = abs_shift_function(7001);
  const TestFunction quartic = quartic_function(7001);
  const GridSpec abs_grid = GridSpec::interval(-1.5, 5.5, 7001);
  out.push_back(check_envelope_bounds(abs_fn, {0.4, 1.0}, 2.0, abs_grid));
  out.push_back(check_envelope_bounds(quartic, {0.1, 0.2}, 2.0));

  for (double gamma : {1.0, 0.4}) {
    CheckReport r;
    r.name = "sublevel-inclusion abs(x-2) p=2 gamma=" + format_double(gamma) +
             " level=1 ball(2, 1.35)";
    const bool inside_ball = check_sublevel_inclusion(abs_fn, 2.0, gamma, 1.0, scalar(2.0), 1.35);
    const bool expected = gamma < 1.0;
    r.record(inside_ball == expected ? 0.0 : 1.0,
             std::string("inclusion ") + (inside_ball ? "holds" : "fails"));
    r.notes.push_back(std::string("expected inclusion to ") + (expected ? "hold" : "fail"));
    out.push_back(std::move(r));
  }

  out.push_back(check_fixed_point_chain(abs_fn, 2.0, 1.0));
  out.push_back(check_fixed_point_chain(quartic, 2.0, 0.05));

  std::vector<Point> samples;
  for (int j = 0; j < 20; ++j) samples.push_back(scalar(-0.43 + 0.35 * j));
  const TestFunction abs_wide = abs_shift_function(10001);
  for (double gamma : {1.0, 0.4}) {
    out.push_back(check_gradient_formula(abs_wide, 2.0, gamma, samples));
  }
  out.push_back(check_gradient_formula(quartic, 3.0, 1.0, {scalar(0.0)}));
  return out;
}

}  // namespace home
