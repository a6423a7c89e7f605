#include "home/inner_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace home {

double SgdssSchedule::step(int i) const { return lambda * std::pow(q, i); }

void SgdssSchedule::validate() const {
  if (!(lambda > 0.0)) throw InvalidArgument("SG-DSS lambda must be > 0");
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("SG-DSS q must lie in (0, 1)");
  if (max_iterations < 1) throw InvalidArgument("SG-DSS needs at least one iteration");
}

InnerBudgetSchedule::InnerBudgetSchedule()
    : breakpoints_{{0, 50}, {3, 300}, {20, 500}, {30, 800}} {}

InnerBudgetSchedule::InnerBudgetSchedule(std::vector<Breakpoint> breakpoints)
    : breakpoints_(std::move(breakpoints)) {
  if (breakpoints_.empty() || breakpoints_.front().first_k != 0) {
    throw InvalidArgument("inner budget schedule must start at k = 0");
  }
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (breakpoints_[i].iterations < 1) {
      throw InvalidArgument("inner budget entries must be positive");
    }
    if (i > 0 && breakpoints_[i].first_k <= breakpoints_[i - 1].first_k) {
      throw InvalidArgument("inner budget breakpoints must increase");
    }
  }
}

InnerBudgetSchedule InnerBudgetSchedule::constant(int iterations) {
  return InnerBudgetSchedule({{0, iterations}});
}

int InnerBudgetSchedule::iterations_at(int k) const {
  int count = breakpoints_.front().iterations;
  for (const auto& bp : breakpoints_) {
    if (bp.first_k > k) break;
    count = bp.iterations;
  }
  return count;
}

namespace {

// F(y) = f(y) [+ 1/(p gamma)||y - anchor||^p] and one subgradient of F.
struct Composite {
  const ObjectiveOracle& f;
  const std::optional<Point>& anchor;
  const EnvelopeParams* params;

  std::pair<double, Point> evaluate(const Point& y) const {
    auto [fv, g] = f.evaluate(y);
    require_finite(fv, "objective oracle");
    if (g.size() != y.size()) throw InvalidArgument("oracle subgradient has wrong dimension");
    if (anchor) {
      fv += regularizer_value(y - *anchor, *params);
      g += regularizer_gradient(y, *anchor, *params);
    }
    return {fv, std::move(g)};
  }

  double value(const Point& y) const {
    double fv = require_finite(f.value(y), "objective oracle");
    if (anchor) fv += regularizer_value(y - *anchor, *params);
    return fv;
  }
};

struct StepLength {
  int i;
  double value;
  double gnorm;

  // Multiplier applied to g. The geometric rule moves a distance of
  // lambda q^i along -g/||g||.
  double operator()(const ConstantStep& s) const { return s.alpha; }
  double operator()(const GeometricStep& s) const { return s.lambda * std::pow(s.q, i) / gnorm; }
  double operator()(const PolyakStep& s) const {
    const double step = (value - s.f_low) / (gnorm * gnorm);
    return std::clamp(step, 0.0, 1e6);
  }
};

void validate_rule(const StepRule& rule) {
  if (const auto* c = std::get_if<ConstantStep>(&rule); c && !(c->alpha > 0.0)) {
    throw InvalidArgument("constant step must be > 0");
  }
  if (const auto* g = std::get_if<GeometricStep>(&rule);
      g && !(g->lambda > 0.0 && g->q > 0.0 && g->q < 1.0)) {
    throw InvalidArgument("geometric step needs lambda > 0 and q in (0, 1)");
  }
  if (const auto* pk = std::get_if<PolyakStep>(&rule); pk && !std::isfinite(pk->f_low)) {
    throw InvalidArgument("Polyak lower bound must be finite");
  }
}

}  // namespace

SubgradientResult run_subgradient_method(const ObjectiveOracle& f, const Point& start,
                                         const StepRule& rule, int iterations,
                                         const std::optional<Point>& anchor,
                                         const EnvelopeParams* params,
                                         const SubgradientObserver& observer) {
  require_dimension(start, f.dimension(), "subgradient start");
  if (anchor) {
    require_dimension(*anchor, f.dimension(), "subgradient anchor");
    if (params == nullptr) throw InvalidArgument("anchored run needs envelope params");
  }
  if (!start.allFinite()) throw InvalidArgument("subgradient start is not finite");
  if (iterations < 0) throw InvalidArgument("iteration count must be >= 0");
  validate_rule(rule);

  const Composite objective{f, anchor, params};
  SubgradientResult result;
  Point y = start;
  result.best = start;
  result.best_value = std::numeric_limits<double>::infinity();

  for (int i = 0; i < iterations; ++i) {
    auto [value, g] = objective.evaluate(y);
    ++result.iterations;
    if (value < result.best_value) {
      result.best_value = value;
      result.best = y;
    }
    const double gnorm = g.norm();
    if (gnorm == 0.0) {
      result.stopped_at_zero_subgradient = true;
      result.last = y;
      result.last_value = value;
      return result;
    }
    const double step = std::visit(StepLength{i, value, gnorm}, rule);
    if (observer && !observer(i, y, value, step)) {
      result.stopped_by_observer = true;
      result.last = y;
      result.last_value = value;
      return result;
    }
    y -= step * g;
    if (!y.allFinite()) {
      throw SolverDiverged("subgradient iterate became non-finite at step " +
                           std::to_string(i));
    }
    result.final_step = step;
  }

  const double last_value = objective.value(y);
  if (last_value < result.best_value) {
    result.best_value = last_value;
    result.best = y;
  }
  result.last = std::move(y);
  result.last_value = last_value;
  return result;
}

ProxApproximation solve_prox_sgdss(const Point& x, const ObjectiveOracle& f,
                                   const EnvelopeParams& params,
                                   const SgdssSchedule& schedule,
                                   const std::optional<Point>& warm_start) {
  params.validate();
  schedule.validate();
  require_dimension(x, f.dimension(), "prox anchor");
  const Point& start = warm_start ? *warm_start : x;
  const std::optional<Point> anchor = x;
  auto run = run_subgradient_method(f, start, GeometricStep{schedule.lambda, schedule.q},
                                    schedule.max_iterations, anchor, &params);
  return make_prox_approximation(x, run.best, f, params, run.iterations, run.final_step);
}

ProxApproximation solve_prox_baseline(const Point& x, const ObjectiveOracle& f,
                                      const EnvelopeParams& params,
                                      const BaselineRule& method, int iterations,
                                      const std::optional<Point>& warm_start) {
  params.validate();
  require_dimension(x, f.dimension(), "prox anchor");
  const Point& start = warm_start ? *warm_start : x;
  const std::optional<Point> anchor = x;
  const StepRule rule = std::visit([](const auto& m) -> StepRule { return m; }, method);
  auto run = run_subgradient_method(f, start, rule, iterations, anchor, &params);
  return make_prox_approximation(x, run.best, f, params, run.iterations, run.final_step);
}

// ---------------------------------------------------------------------------
// Grid oracle

GridSpec GridSpec::interval(double lower, double upper, int points) {
  GridSpec g;
  g.lower = Point::Constant(1, lower);
  g.upper = Point::Constant(1, upper);
  g.points_per_axis = points;
  g.validate();
  return g;
}

GridSpec GridSpec::box(const Point& lower, const Point& upper, int points_per_axis) {
  GridSpec g{lower, upper, points_per_axis};
  g.validate();
  return g;
}

long long GridSpec::size() const {
  long long n = 1;
  for (Eigen::Index a = 0; a < dimension(); ++a) n *= points_per_axis;
  return n;
}

double GridSpec::cell(Eigen::Index axis) const {
  return (upper[axis] - lower[axis]) / (points_per_axis - 1);
}

double GridSpec::cell_diagonal() const {
  double s = 0.0;
  for (Eigen::Index a = 0; a < dimension(); ++a) s += cell(a) * cell(a);
  return std::sqrt(s);
}

Point GridSpec::at(long long flat_index) const {
  Point x(dimension());
  long long rest = flat_index;
  for (Eigen::Index a = 0; a < dimension(); ++a) {
    const long long i = rest % points_per_axis;
    rest /= points_per_axis;
    const double t = static_cast<double>(i) / (points_per_axis - 1);
    x[a] = lower[a] + (upper[a] - lower[a]) * t;
  }
  return x;
}

void GridSpec::validate() const {
  if (lower.size() != upper.size()) throw InvalidArgument("grid bounds differ in dimension");
  if (dimension() < 1 || dimension() > 2) {
    throw InvalidArgument("grid oracle supports one or two dimensions");
  }
  if (points_per_axis < 2) throw InvalidArgument("grid needs at least two points per axis");
  if (!((upper - lower).array() > 0.0).all()) {
    throw InvalidArgument("grid lower bound must be below the upper bound");
  }
  const double cells = std::pow(static_cast<double>(points_per_axis), dimension());
  if (cells > static_cast<double>(kMaxCells)) {
    throw ResourceLimit("grid of " + std::to_string(cells) + " points exceeds the limit");
  }
}

bool BruteForceProx::multivalued() const {
  return clusters.size() > 1 || max_cluster_span_cells > 3.0;
}

GridEnvelope::GridEnvelope(const ObjectiveOracle& f, GridSpec grid) : grid_(std::move(grid)) {
  grid_.validate();
  if (f.dimension() != grid_.dimension()) {
    throw InvalidArgument("grid dimension does not match the oracle");
  }
  values_.resize(static_cast<std::size_t>(grid_.size()));
  for (long long j = 0; j < grid_.size(); ++j) {
    values_[j] = require_finite(f.value(grid_.at(j)), "objective oracle");
  }
}

namespace {

// Subproblem values over the whole grid for one anchor.
std::vector<double> subproblem_on_grid(const GridSpec& grid, const std::vector<double>& fvals,
                                       const Point& x, const EnvelopeParams& params) {
  const long long n = grid.size();
  const double scale = 1.0 / (params.p * params.gamma);
  const double half_p = params.p / 2.0;
  const bool quadratic = params.p == 2.0;
  std::vector<double> out(static_cast<std::size_t>(n));
  const int k = grid.points_per_axis;
  if (grid.dimension() == 1) {
    for (long long j = 0; j < n; ++j) {
      const double t = static_cast<double>(j) / (k - 1);
      const double y = grid.lower[0] + (grid.upper[0] - grid.lower[0]) * t;
      const double d2 = (x[0] - y) * (x[0] - y);
      out[j] = fvals[j] + scale * (quadratic ? d2 : std::pow(d2, half_p));
    }
  } else {
    for (long long j = 0; j < n; ++j) {
      const Point y = grid.at(j);
      const double d2 = (x - y).squaredNorm();
      out[j] = fvals[j] + scale * (quadratic ? d2 : std::pow(d2, half_p));
    }
  }
  return out;
}

}  // namespace

double GridEnvelope::envelope(const Point& x, const EnvelopeParams& params) const {
  require_dimension(x, grid_.dimension(), "grid anchor");
  const auto vals = subproblem_on_grid(grid_, values_, x, params);
  return *std::min_element(vals.begin(), vals.end());
}

BruteForceProx GridEnvelope::prox(const Point& x, const EnvelopeParams& params) const {
  params.validate();
  require_dimension(x, grid_.dimension(), "grid anchor");
  const auto vals = subproblem_on_grid(grid_, values_, x, params);
  const long long n = grid_.size();
  const int k = grid_.points_per_axis;
  const auto dim = grid_.dimension();

  const long long arg =
      std::distance(vals.begin(), std::min_element(vals.begin(), vals.end()));
  const double vmin = vals[arg];

  // Smallest increase to a grid neighbour of the minimizer: differences
  // below it cannot be resolved at this grid spacing.
  double resolution = std::numeric_limits<double>::infinity();
  std::vector<long long> coord(dim);
  {
    long long rest = arg;
    for (Eigen::Index a = 0; a < dim; ++a) {
      coord[a] = rest % k;
      rest /= k;
    }
  }
  long long stride = 1;
  for (Eigen::Index a = 0; a < dim; ++a) {
    for (int s : {-1, 1}) {
      const long long c = coord[a] + s;
      if (c < 0 || c >= k) continue;
      resolution = std::min(resolution, vals[arg + s * stride] - vmin);
    }
    stride *= k;
  }
  if (!std::isfinite(resolution)) resolution = 0.0;
  BruteForceProx result;
  result.argmin = grid_.at(arg);
  result.value = vmin;
  result.slack = resolution + 1e-12 * std::max(1.0, std::abs(vmin));

  std::vector<long long> members;
  for (long long j = 0; j < n; ++j) {
    if (vals[j] <= vmin + result.slack) members.push_back(j);
  }
  for (long long j : members) result.minimizers.push_back(grid_.at(j));

  // Cluster members by grid adjacency (8-neighbourhood in 2D).
  std::vector<int> slot(static_cast<std::size_t>(n), -1);
  for (std::size_t s = 0; s < members.size(); ++s) slot[members[s]] = static_cast<int>(s);
  std::vector<int> label(members.size(), -1);
  auto coords_of = [&](long long j) {
    return std::pair<long long, long long>{j % k, dim == 2 ? j / k : 0};
  };
  const long long rows = dim == 2 ? k : 1;
  int next_label = 0;
  for (std::size_t s = 0; s < members.size(); ++s) {
    if (label[s] >= 0) continue;
    label[s] = next_label;
    std::vector<std::size_t> stack{s};
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      const auto [ci, cj] = coords_of(members[cur]);
      for (long long dj = -1; dj <= 1; ++dj) {
        for (long long di = -1; di <= 1; ++di) {
          const long long oi = ci + di;
          const long long oj = cj + dj;
          if (oi < 0 || oi >= k || oj < 0 || oj >= rows) continue;
          const int o = slot[oj * k + oi];
          if (o < 0 || label[o] >= 0) continue;
          label[o] = next_label;
          stack.push_back(static_cast<std::size_t>(o));
        }
      }
    }
    ++next_label;
  }
  result.clusters.resize(next_label);
  std::vector<long long> lo_i(next_label, k), hi_i(next_label, -1), lo_j(next_label, k),
      hi_j(next_label, -1);
  for (std::size_t s = 0; s < members.size(); ++s) {
    const int l = label[s];
    result.clusters[l].push_back(result.minimizers[s]);
    const auto [ci, cj] = coords_of(members[s]);
    lo_i[l] = std::min(lo_i[l], ci);
    hi_i[l] = std::max(hi_i[l], ci);
    lo_j[l] = std::min(lo_j[l], cj);
    hi_j[l] = std::max(hi_j[l], cj);
  }
  for (int l = 0; l < next_label; ++l) {
    const double span = static_cast<double>(std::max(hi_i[l] - lo_i[l], hi_j[l] - lo_j[l]));
    result.max_cluster_span_cells = std::max(result.max_cluster_span_cells, span);
  }
  return result;
}

BruteForceProx brute_force_prox(const Point& x, const ObjectiveOracle& f,
                                const EnvelopeParams& params, const GridSpec& grid) {
  return GridEnvelope(f, grid).prox(x, params);
}

}  // namespace home
