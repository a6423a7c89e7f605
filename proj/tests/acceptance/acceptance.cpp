// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 only
// when every criterion passes.
//
//   home_acceptance [--only N]...

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "home/csv.hpp"
#include "home/envelope.hpp"
#include "home/experiment.hpp"
#include "home/inner_solvers.hpp"
#include "home/validation.hpp"

namespace fs = std::filesystem;
using home::Point;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double time_limit_seconds;
  std::function<Outcome()> body;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Point scalar(double v) {
  Point x(1);
  x(0) = v;
  return x;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Independent eps_k = 1/(k+1)^2 and its tail sums.
double eps(int k) { return 1.0 / ((k + 1.0) * (k + 1.0)); }
double eps_tail(int k) {
  double s = std::numbers::pi * std::numbers::pi / 6.0;
  for (int j = 0; j < k; ++j) s -= eps(j);
  return s;
}
const double kEpsSum = std::numbers::pi * std::numbers::pi / 6.0;

// Desk-scale model-1 configuration shared by criteria 7, 9 and 11.
home::ExperimentConfig desk_config() {
  home::ExperimentConfig cfg = home::ExperimentConfig::defaults(home::RecoveryModel::kSymmetric);
  cfg.n1 = cfg.n2 = 20;
  cfg.r = 3;
  cfg.p = 1.25;
  cfg.seed = 1;
  cfg.outer_iterations = 40;
  cfg.residual_tol = 0.0;
  cfg.methods = home::parse_methods("boosted-hippa,hippa");
  cfg.output_dir.clear();
  return cfg;
}

const home::ExperimentResult& desk_run() {
  static const home::ExperimentResult result = home::run_experiment(desk_config());
  return result;
}

const home::MethodOutcome& outcome_of(const home::ExperimentResult& r, const std::string& name) {
  for (const auto& m : r.methods) {
    if (m.method.name() == name) return m;
  }
  throw std::runtime_error("method missing: " + name);
}

Outcome c1_inequalities() {
  const auto reports = home::check_inequality_suites(20240601, 1000);
  long long samples = 0;
  double worst = 0.0;
  std::string failed;
  for (const auto& r : reports) {
    samples += r.samples;
    worst = std::max(worst, r.max_violation);
    if (!r.passed || r.samples != 1000) failed += " " + r.name;
  }
  return {failed.empty(), std::to_string(reports.size()) + " configurations, " +
                              std::to_string(samples) + " samples, max violation " + fmt(worst) +
                              (failed.empty() ? "" : ", failed:" + failed)};
}

Outcome c2_kappa() {
  const double t = home::kappa_threshold();
  const bool ok = t >= 1.321 && t <= 1.322 && home::kappa(2.0) == 1.0;
  char buf[96];
  std::snprintf(buf, sizeof buf, "t = %.10f, kappa(2) = %.17g", t, home::kappa(2.0));
  return {ok, buf};
}

Outcome c3_sandwich() {
  const auto abs = home::abs_shift_function(7001);
  const auto quartic = home::quartic_function(7001);
  const auto ra = home::check_envelope_bounds(abs, {0.4, 1.0}, 2.0);
  const auto rq = home::check_envelope_bounds(quartic, {0.1, 0.2}, 2.0);
  return {ra.passed && rq.passed, "abs max violation " + fmt(ra.max_violation) + " (tol " +
                                      fmt(ra.tolerance) + "), quartic max violation " +
                                      fmt(rq.max_violation) + " (tol " + fmt(rq.tolerance) + ")"};
}

Outcome c4_sublevel() {
  const auto tf = home::abs_shift_function();
  const bool at1 = home::check_sublevel_inclusion(tf, 2.0, 1.0, 1.0, scalar(2.0), 1.35);
  const bool at04 = home::check_sublevel_inclusion(tf, 2.0, 0.4, 1.0, scalar(2.0), 1.35);
  return {!at1 && at04, std::string("gamma=1: ") + (at1 ? "true" : "false") +
                            ", gamma=0.4: " + (at04 ? "true" : "false")};
}

Outcome c5_gradient() {
  const auto tf = home::abs_shift_function();
  std::vector<Point> samples;
  for (int j = 0; j < 20; ++j) samples.push_back(scalar(-0.43 + 0.35 * j));
  double worst = 0.0;
  bool ok = true;
  long long checked = 0;
  for (double gamma : {0.4, 1.0}) {
    const auto r = home::check_gradient_formula(tf, 2.0, gamma, samples);
    worst = std::max(worst, r.max_violation);
    checked += r.samples;
    ok = ok && r.passed && !r.skipped && r.samples == 20;
  }
  ok = ok && worst < 1e-4;
  return {ok, std::to_string(checked) + " samples, max relative error " + fmt(worst)};
}

Outcome c6_nondifferentiability() {
  const auto tf = home::quartic_function(7001);
  const auto p3 =
      home::brute_force_prox(scalar(0.0), *tf.oracle, home::EnvelopeParams::make(3.0, 1.0), tf.domain);
  const auto p2 =
      home::brute_force_prox(scalar(0.0), *tf.oracle, home::EnvelopeParams::make(2.0, 0.2), tf.domain);
  const double cell = tf.domain.cell(0);
  bool symmetric = p3.minimizers.size() >= 2;
  for (const auto& y : p3.minimizers) {
    const bool mirrored = std::any_of(p3.minimizers.begin(), p3.minimizers.end(),
                                      [&](const Point& z) { return std::abs(z(0) + y(0)) <= cell; });
    symmetric = symmetric && mirrored && y(0) != 0.0;
  }
  const bool ok = symmetric && p3.clusters.size() >= 2 && p2.clusters.size() == 1;
  std::string detail = "p=3: " + std::to_string(p3.minimizers.size()) + " minimizers in " +
                       std::to_string(p3.clusters.size()) + " clusters";
  if (!p3.minimizers.empty()) {
    detail += " (" + fmt(p3.minimizers.front()(0)) + " .. " + fmt(p3.minimizers.back()(0)) + ")";
  }
  detail += "; p=2, gamma=0.2: " + std::to_string(p2.clusters.size()) + " cluster(s)";
  return {ok, detail};
}

Outcome c7_certificates() {
  const auto cfg = desk_config();
  const auto& result = desk_run();
  const auto& boosted = outcome_of(result, "boosted-hippa");
  const auto params = cfg.envelope_params();
  const double p = params.p;
  const double sigma = params.sigma;
  const auto& rows = boosted.trace;
  if (boosted.failure || rows.size() < 2) return {false, "run failed or produced no steps"};

  // Re-evaluate the descent condition and the Lyapunov sequence from the
  // stored values.
  double min_slack = std::numeric_limits<double>::infinity();
  int accepted = 0;
  double max_increase = -std::numeric_limits<double>::infinity();
  double telescoped = 0.0;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const auto& a = rows[i].iterate;
    const auto& b = rows[i + 1].iterate;
    const double decrease = sigma * std::pow(a.residual_norm, p);
    telescoped += decrease;
    const double la = a.envelope_value_inexact + eps_tail(a.k) + eps_tail(a.k + 1);
    const double lb = b.envelope_value_inexact + eps_tail(b.k) + eps_tail(b.k + 1);
    max_increase = std::max(max_increase, lb - la);
    if (b.fallback) continue;
    ++accepted;
    const double rhs = a.envelope_value_inexact - decrease + eps(a.k) + eps(b.k);
    min_slack = std::min(min_slack, rhs - b.envelope_value_inexact);
  }
  const double bound = rows.front().iterate.envelope_value_inexact + 2.0 * kEpsSum;
  const bool ok = min_slack >= 0.0 && max_increase <= 1e-9 && telescoped <= bound &&
                  boosted.descent_holds && boosted.telescoped.holds();
  return {ok, std::to_string(accepted) + " accepted steps, " + std::to_string(boosted.fallbacks) +
                  " fallbacks, min descent slack " + fmt(min_slack) +
                  ", max Lyapunov increase " + fmt(max_increase) + ", telescoped " +
                  fmt(telescoped) + " <= " + fmt(bound)};
}

// Final objectives under an equal oracle-call budget; ties within 1e-8
// relative count as ties.
Outcome c8_comparison() {
  const home::InnerBudgetSchedule schedule;
  const long long budget = home::inner_calls_for_outer(schedule, 40);
  const double tie = 1e-8;
  auto leq = [tie](double a, double b) { return a <= b + tie * std::max(1.0, std::abs(b)); };

  bool ok = true;
  std::string detail = "budget " + std::to_string(budget) + " calls;";
  for (auto model : {home::RecoveryModel::kSymmetric, home::RecoveryModel::kAsymmetric}) {
    int wins = 0;
    std::string seeds;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      auto cfg = home::ExperimentConfig::defaults(model);
      cfg.n1 = 20;
      cfg.n2 = model == home::RecoveryModel::kSymmetric ? 20 : 16;
      cfg.r = 3;
      cfg.p = 1.25;
      cfg.seed = seed;
      cfg.outer_iterations.reset();
      cfg.oracle_calls = budget;
      cfg.residual_tol = 0.0;
      cfg.methods = home::default_methods();
      cfg.output_dir.clear();
      const auto result = home::run_experiment(cfg);
      double boosted = 0.0;
      double hippa = 0.0;
      double best = std::numeric_limits<double>::infinity();
      std::string best_name;
      for (const auto& m : result.methods) {
        if (m.failure) ok = false;
        if (m.method.kind == home::MethodKind::kBoostedHippa) {
          boosted = m.final_objective;
        } else if (m.method.kind == home::MethodKind::kHippa) {
          hippa = m.final_objective;
        } else if (m.final_objective < best) {
          best = m.final_objective;
          best_name = m.method.name();
        }
      }
      const bool win = leq(boosted, hippa) && leq(hippa, best);
      wins += win ? 1 : 0;
      seeds += " s" + std::to_string(seed) + (win ? "+" : "-") + "(" + fmt(boosted) + "/" +
               fmt(hippa) + "/" + best_name + " " + fmt(best) + ")";
    }
    ok = ok && wins >= 4;
    detail += std::string(" model ") + (model == home::RecoveryModel::kSymmetric ? "1" : "2") +
              ": " + std::to_string(wins) + "/5" + seeds + ";";
  }
  return {ok, detail};
}

Outcome c9_iteration_bound() {
  bool ok = true;
  int runs = 0;
  std::string detail;
  for (double tol : {1.0, 0.3, 1e-6}) {
    auto cfg = desk_config();
    cfg.residual_tol = tol;
    cfg.outer_iterations = 200;
    const auto result = home::run_experiment(cfg);
    const auto params = cfg.envelope_params();
    for (const auto& m : result.methods) {
      ++runs;
      const int iterations = static_cast<int>(m.trace.size()) - 1;
      const double m0 = m.trace.front().iterate.envelope_value_inexact;
      const double bound = std::ceil((m0 + 2.0 * kEpsSum) / (params.sigma * std::pow(tol, params.p)));
      const bool holds = !m.failure && iterations <= bound && m.iteration_bound_holds &&
                         m.iteration_bound && *m.iteration_bound == bound;
      ok = ok && holds;
      detail += " " + m.method.name() + "@" + fmt(tol) + ": " + std::to_string(iterations) +
                " <= " + fmt(bound) + " (" + m.stop_reason + ");";
    }
  }
  return {ok, std::to_string(runs) + " runs;" + detail};
}

Outcome c10_determinism() {
  const fs::path base = fs::temp_directory_path() / "home_acceptance_determinism";
  fs::remove_all(base);
  int compared = 0;
  std::string mismatched;
  for (auto model : {home::RecoveryModel::kSymmetric, home::RecoveryModel::kAsymmetric}) {
    const std::string tag = model == home::RecoveryModel::kSymmetric ? "m1" : "m2";
    for (const char* run : {"a", "b"}) {
      auto cfg = home::ExperimentConfig::defaults(model);
      cfg.n1 = 10;
      cfg.n2 = model == home::RecoveryModel::kSymmetric ? 10 : 8;
      cfg.r = 2;
      cfg.seed = 3;
      cfg.outer_iterations = 6;
      cfg.output_dir = (base / tag / run).string();
      home::run_experiment(cfg);
    }
    for (const auto& entry : fs::directory_iterator(base / tag / "a")) {
      const fs::path other = base / tag / "b" / entry.path().filename();
      ++compared;
      if (!fs::exists(other) || read_file(entry.path()) != read_file(other)) {
        mismatched += " " + tag + "/" + entry.path().filename().string();
      }
    }
  }
  fs::remove_all(base);
  return {mismatched.empty() && compared > 0,
          std::to_string(compared) + " files compared" +
              (mismatched.empty() ? ", all byte-identical" : ", differ:" + mismatched)};
}

Outcome c11_rate_probe() {
  const auto& boosted = outcome_of(desk_run(), "boosted-hippa");
  std::vector<std::pair<double, double>> pts;
  for (auto it = boosted.trace.rbegin(); it != boosted.trace.rend() && pts.size() < 20; ++it) {
    if (it->iterate.k == 0 || it->iterate.fallback || !(it->iterate.residual_norm > 0.0)) continue;
    pts.emplace_back(it->iterate.k, std::log(it->iterate.residual_norm));
  }
  if (pts.size() < 2) return {false, "too few accepted iterations"};
  double mk = 0.0;
  double ml = 0.0;
  for (const auto& [k, l] : pts) {
    mk += k;
    ml += l;
  }
  mk /= pts.size();
  ml /= pts.size();
  double num = 0.0;
  double den = 0.0;
  for (const auto& [k, l] : pts) {
    num += (k - mk) * (l - ml);
    den += (k - mk) * (k - mk);
  }
  const double slope = num / den;
  return {slope < 0.0, "slope of log residual over last " + std::to_string(pts.size()) +
                           " accepted iterations: " + fmt(slope)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--only N]...\n", argv[0]);
      return 2;
    }
  }

  const std::vector<Criterion> criteria = {
      {1, "inequality suites", 5, c1_inequalities},
      {2, "kappa threshold", 1, c2_kappa},
      {3, "envelope sandwich", 30, c3_sandwich},
      {4, "sublevel-set example", 10, c4_sublevel},
      {5, "gradient formula", 30, c5_gradient},
      {6, "nondifferentiability probe", 10, c6_nondifferentiability},
      {7, "line-search certificates", 120, c7_certificates},
      {8, "comparative performance", 600, c8_comparison},
      {9, "iteration-bound stopping", 120, c9_iteration_bound},
      {10, "determinism", 60, c10_determinism},
      {11, "empirical rate probe", 120, c11_rate_probe},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.time_limit_seconds;
    const bool passed = out.passed && in_time;
    failures += passed ? 0 : 1;
    std::printf("%s  %2d %-27s %s [%.2fs / %gs%s]\n", passed ? "PASS" : "FAIL", c.id,
                c.title.c_str(), out.detail.c_str(), secs, c.time_limit_seconds,
                in_time ? "" : " exceeded");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
