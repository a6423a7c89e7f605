#include "home/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "home/random.hpp"

namespace home {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    throw InvalidArgument(key + ": expected a finite number, got '" + text + "'");
  }
  return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw InvalidArgument(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

int parse_int(const std::string& key, const std::string& text) {
  const long long v = parse_integer(key, text);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw InvalidArgument(key + ": value out of range");
  }
  return static_cast<int>(v);
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw InvalidArgument(key + ": expected a boolean, got '" + text + "'");
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

const char* stop_reason_name(StopReason reason) {
  switch (reason) {
    case StopReason::kResidual:
      return "residual";
    case StopReason::kOuterIterations:
      return "outer-iterations";
    case StopReason::kTime:
      return "time";
    case StopReason::kOracleCalls:
      return "oracle-calls";
  }
  return "unknown";
}

}  // namespace

std::string MethodSpec::name() const {
  switch (kind) {
    case MethodKind::kBoostedHippa:
      return "boosted-hippa";
    case MethodKind::kHippa:
      return "hippa";
    case MethodKind::kSgDss:
      return "sg-dss";
    case MethodKind::kSgCss:
      return "sg-css(" + shortest(alpha) + ")";
    case MethodKind::kSgPss:
      return "sg-pss";
  }
  return "unknown";
}

std::string MethodSpec::file_stem() const {
  std::string out = name();
  std::replace(out.begin(), out.end(), '(', '-');
  out.erase(std::remove(out.begin(), out.end(), ')'), out.end());
  return out;
}

MethodSpec parse_method(const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "boosted-hippa") return {MethodKind::kBoostedHippa, 0.0};
  if (text == "hippa") return {MethodKind::kHippa, 0.0};
  if (text == "sg-dss") return {MethodKind::kSgDss, 0.0};
  if (text == "sg-pss") return {MethodKind::kSgPss, 0.0};
  const std::string prefix = "sg-css(";
  if (text.rfind(prefix, 0) == 0 && text.size() > prefix.size() + 1 && text.back() == ')') {
    const double alpha =
        parse_real("methods", text.substr(prefix.size(), text.size() - prefix.size() - 1));
    if (!(alpha > 0.0)) throw InvalidArgument("methods: sg-css step must be > 0");
    return {MethodKind::kSgCss, alpha};
  }
  throw InvalidArgument("methods: unknown method '" + text + "'");
}

std::vector<MethodSpec> default_methods() {
  return {{MethodKind::kBoostedHippa, 0.0}, {MethodKind::kHippa, 0.0},
          {MethodKind::kSgDss, 0.0},        {MethodKind::kSgCss, 0.01},
          {MethodKind::kSgCss, 0.1},        {MethodKind::kSgCss, 1.0},
          {MethodKind::kSgPss, 0.0}};
}

std::vector<MethodSpec> parse_methods(const std::string& text) {
  if (trim(text) == "all") return default_methods();
  std::vector<MethodSpec> out;
  std::string current;
  int depth = 0;
  auto flush = [&] {
    if (trim(current).empty()) throw InvalidArgument("methods: empty entry in list");
    const MethodSpec m = parse_method(current);
    if (std::find(out.begin(), out.end(), m) != out.end()) {
      throw InvalidArgument("methods: '" + m.name() + "' listed twice");
    }
    out.push_back(m);
    current.clear();
  };
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      flush();
    } else {
      current += c;
    }
  }
  flush();
  return out;
}

ExperimentConfig ExperimentConfig::defaults(RecoveryModel model) {
  ExperimentConfig cfg;
  cfg.model = model;
  if (model == RecoveryModel::kAsymmetric) {
    cfg.n1 = 50;
    cfg.n2 = 40;
    cfg.gamma = 1.0;
  }
  return cfg;
}

EnvelopeParams ExperimentConfig::envelope_params() const {
  return EnvelopeParams::make(p, gamma, theta_ls);
}

ModelConfig ExperimentConfig::model_config() const {
  ModelConfig mc;
  mc.model = model;
  mc.outlier_ratio = outlier_ratio;
  return mc;
}

void ExperimentConfig::validate() const {
  envelope_params();
  model_config().validate();
  if (n1 <= 0 || n2 <= 0 || r <= 0) throw InvalidArgument("n1, n2 and r must be positive");
  if (model == RecoveryModel::kSymmetric && n1 != n2) {
    throw InvalidArgument("n2: the symmetric model needs n1 == n2");
  }
  if (r > std::min(n1, n2)) throw InvalidArgument("r must not exceed min(n1, n2)");
  if (methods.empty()) throw InvalidArgument("methods: at least one method is required");
  if (!outer_iterations && !seconds && !oracle_calls) {
    throw InvalidArgument("iters: a budget (iters, seconds or oracle-calls) is required");
  }
  if (outer_iterations && *outer_iterations < 0) throw InvalidArgument("iters must be >= 0");
  if (seconds && !(*seconds >= 0.0)) throw InvalidArgument("seconds must be >= 0");
  if (oracle_calls && *oracle_calls < 0) throw InvalidArgument("oracle-calls must be >= 0");
  if (!(residual_tol >= 0.0)) throw InvalidArgument("residual-tol must be >= 0");
  SgdssSchedule{sgdss_lambda, sgdss_q, 1}.validate();
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "model", "n1",     "n2",           "r",            "p",            "gamma",
      "theta", "outliers", "seed",       "iters",        "seconds",      "oracle-calls",
      "methods", "out",  "residual-tol", "sgdss-lambda", "sgdss-q",      "timing"};
  return keys;
}

ConfigEntries read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open config file " + path);
  ConfigEntries out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": missing key");
    }
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

ExperimentConfig parse_config(const ConfigEntries& file, const ConfigEntries& flags) {
  ConfigEntries merged = file;
  merged.insert(merged.end(), flags.begin(), flags.end());
  for (const auto& [key, value] : merged) {
    if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end()) {
      throw InvalidArgument("unknown configuration key '" + key + "'");
    }
  }
  auto lookup = [&](const std::string& key) -> std::optional<std::string> {
    std::optional<std::string> v;
    for (const auto& [k, value] : merged) {
      if (k == key) v = value;
    }
    return v;
  };

  RecoveryModel model = RecoveryModel::kSymmetric;
  if (auto v = lookup("model")) {
    try {
      model = parse_recovery_model(*v);
    } catch (const InvalidArgument&) {
      throw InvalidArgument("model: expected 1, 2, symmetric or asymmetric, got '" + *v + "'");
    }
  }
  ExperimentConfig cfg = ExperimentConfig::defaults(model);

  const auto n1 = lookup("n1");
  const auto n2 = lookup("n2");
  if (n1) cfg.n1 = parse_int("n1", *n1);
  if (n2) cfg.n2 = parse_int("n2", *n2);
  if (model == RecoveryModel::kSymmetric && n1 && !n2) cfg.n2 = cfg.n1;
  if (model == RecoveryModel::kSymmetric && n2 && !n1) cfg.n1 = cfg.n2;
  if (auto v = lookup("r")) cfg.r = parse_int("r", *v);
  if (auto v = lookup("p")) cfg.p = parse_real("p", *v);
  if (auto v = lookup("gamma")) cfg.gamma = parse_real("gamma", *v);
  if (auto v = lookup("theta")) cfg.theta_ls = parse_real("theta", *v);
  if (auto v = lookup("outliers")) cfg.outlier_ratio = parse_real("outliers", *v);
  if (auto v = lookup("seed")) {
    const long long s = parse_integer("seed", *v);
    if (s < 0) throw InvalidArgument("seed must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  const auto iters = lookup("iters");
  const auto seconds = lookup("seconds");
  const auto calls = lookup("oracle-calls");
  if (iters) {
    cfg.outer_iterations = parse_int("iters", *iters);
  } else if (seconds || calls) {
    cfg.outer_iterations.reset();
  }
  if (seconds) cfg.seconds = parse_real("seconds", *seconds);
  if (calls) cfg.oracle_calls = parse_integer("oracle-calls", *calls);
  if (auto v = lookup("methods")) cfg.methods = parse_methods(*v);
  if (auto v = lookup("out")) cfg.output_dir = *v;
  if (auto v = lookup("residual-tol")) cfg.residual_tol = parse_real("residual-tol", *v);
  if (auto v = lookup("sgdss-lambda")) cfg.sgdss_lambda = parse_real("sgdss-lambda", *v);
  if (auto v = lookup("sgdss-q")) cfg.sgdss_q = parse_real("sgdss-q", *v);
  if (auto v = lookup("timing")) cfg.timing = parse_bool("timing", *v);

  cfg.validate();
  return cfg;
}

long long inner_calls_for_outer(const InnerBudgetSchedule& schedule, int outer) {
  long long total = 0;
  for (int k = 0; k <= outer; ++k) total += schedule.iterations_at(k);
  return total;
}

bool ExperimentResult::any_failure() const {
  return std::any_of(methods.begin(), methods.end(),
                     [](const MethodOutcome& m) { return m.failure.has_value(); });
}

Point initial_point(std::uint64_t seed, Eigen::Index dimension) {
  Rng rng(derive_seed(seed, 1));
  Point x(dimension);
  for (Eigen::Index i = 0; i < dimension; ++i) x(i) = rng.normal();
  return x;
}

namespace {

using Clock = std::chrono::steady_clock;

struct RunContext {
  const ExperimentConfig& cfg;
  const RecoveryInstance& inst;
  const ObjectiveOracle& f;
  const Point& x0;
  long long baseline_iterations;
  bool record_time;
};

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void certify(MethodOutcome& out, const std::vector<IterateTrace>& trace,
             const HippaConfig& hc, double residual_tol) {
  const auto slack = descent_certificates(trace, hc.params, hc.schedule);
  out.min_descent_slack = slack.empty() ? 0.0 : *std::min_element(slack.begin(), slack.end());
  out.descent_holds = std::all_of(slack.begin(), slack.end(), [](double s) { return s >= 0.0; });
  const auto lyap = lyapunov_sequence(trace, hc.schedule);
  out.max_lyapunov_increase = 0.0;
  for (std::size_t i = 1; i < lyap.size(); ++i) {
    out.max_lyapunov_increase = std::max(out.max_lyapunov_increase, lyap[i] - lyap[i - 1]);
  }
  out.telescoped = telescoped_bound(trace, hc.params, hc.schedule, 0.0);
  if (residual_tol > 0.0 && !trace.empty()) {
    out.iteration_bound = iteration_bound(trace.front().envelope_value_inexact, 0.0, hc.params,
                                          hc.schedule, residual_tol);
    out.iteration_bound_holds =
        static_cast<double>(trace.size() - 1) <= *out.iteration_bound;
  }
}

MethodOutcome run_hippa_method(const MethodSpec& method, const RunContext& ctx) {
  MethodOutcome out;
  out.method = method;
  HippaConfig hc;
  hc.params = ctx.cfg.envelope_params();
  hc.stop.residual_tol = ctx.cfg.residual_tol;
  hc.stop.max_outer_iterations = ctx.cfg.outer_iterations;
  hc.stop.max_seconds = ctx.cfg.seconds;
  hc.stop.max_oracle_calls = ctx.cfg.oracle_calls;
  const ProxSolver solver =
      sgdss_prox_solver(ctx.f, hc.params, ctx.cfg.sgdss_lambda, ctx.cfg.sgdss_q);

  std::vector<IterateTrace> trace;
  std::vector<Point> iterates;
  try {
    RunResult run = method.kind == MethodKind::kBoostedHippa
                        ? boosted_hippa_run(ctx.x0, ctx.f, hc, solver)
                        : hippa_run(ctx.x0, ctx.f, hc, solver);
    trace = std::move(run.trace);
    iterates = std::move(run.iterates);
    out.final_point = run.x;
    out.oracle_calls = run.oracle_calls;
    out.stop_reason = stop_reason_name(run.reason);
    out.fallbacks = run.fallbacks;
  } catch (const RunFailure& e) {
    trace = e.trace();
    out.failure = e.what();
    out.failure_code = e.code();
    out.stop_reason = "failure";
    out.final_point = ctx.x0;
    out.oracle_calls = trace.empty() ? 0 : trace.back().oracle_calls;
  }

  out.iterations = trace.empty() ? 0 : static_cast<int>(trace.size()) - 1;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    TraceRow row;
    row.iterate = trace[i];
    if (!ctx.record_time) row.iterate.elapsed_seconds = 0.0;
    row.recovery_error = i < iterates.size() ? recovery_error(iterates[i], ctx.inst) : kNan;
    out.trace.push_back(row);
  }
  if (!iterates.empty()) out.final_point = iterates.back();
  out.final_objective = ctx.f.value(out.final_point);
  out.final_recovery_error = recovery_error(out.final_point, ctx.inst);
  certify(out, trace, hc, ctx.cfg.residual_tol);
  return out;
}

MethodOutcome run_baseline_method(const MethodSpec& method, const RunContext& ctx) {
  MethodOutcome out;
  out.method = method;
  StepRule rule;
  switch (method.kind) {
    case MethodKind::kSgDss:
      rule = GeometricStep{ctx.cfg.sgdss_lambda, ctx.cfg.sgdss_q};
      break;
    case MethodKind::kSgCss:
      rule = ConstantStep{method.alpha};
      break;
    case MethodKind::kSgPss:
      rule = PolyakStep{0.0};
      break;
    default:
      throw InvalidArgument("not a baseline method: " + method.name());
  }

  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  auto push_row = [&](int k, double value, const Point& y) {
    TraceRow row;
    row.iterate.k = k;
    row.iterate.residual_norm = kNan;
    row.iterate.envelope_value_inexact = kNan;
    row.iterate.objective_value = value;
    row.iterate.sigma_k = kNan;
    row.iterate.alpha = kNan;
    row.iterate.oracle_calls = k;
    row.iterate.elapsed_seconds = ctx.record_time ? elapsed() : 0.0;
    row.recovery_error = recovery_error(y, ctx.inst);
    out.trace.push_back(row);
  };
  const std::optional<double> seconds = ctx.cfg.seconds;
  const SubgradientObserver observer = [&](int i, const Point& y, double value, double) {
    push_row(i, value, y);
    return !(seconds && elapsed() >= *seconds);
  };

  const int iterations = static_cast<int>(
      std::min<long long>(ctx.baseline_iterations, std::numeric_limits<int>::max()));
  try {
    const SubgradientResult run =
        run_subgradient_method(ctx.f, ctx.x0, rule, iterations, std::nullopt, nullptr, observer);
    if (!run.stopped_by_observer) {
      push_row(static_cast<int>(out.trace.size()), run.last_value, run.last);
    }
    out.final_point = run.best;
    out.final_objective = run.best_value;
    out.oracle_calls = run.iterations;
    out.stop_reason = run.stopped_at_zero_subgradient ? "zero-subgradient"
                      : run.stopped_by_observer       ? "time"
                                                      : "iterations";
  } catch (const Error& e) {
    out.failure = e.what();
    out.failure_code = e.code();
    out.stop_reason = "failure";
    out.final_point = ctx.x0;
    out.final_objective = ctx.f.value(ctx.x0);
    out.oracle_calls = static_cast<long long>(out.trace.size());
  }
  out.iterations = out.trace.empty() ? 0 : out.trace.back().iterate.k;
  out.final_recovery_error = recovery_error(out.final_point, ctx.inst);
  return out;
}

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.config = config;

  const auto inst = std::make_shared<const RecoveryInstance>(
      generate_instance(config.model_config(), config.n1, config.n2, config.r, config.seed));
  const auto f = recovery_oracle(inst);
  const Point x0 = initial_point(config.seed, f->dimension());

  result.m = inst->m;
  result.outlier_count = static_cast<int>(
      std::count(inst->outlier_mask.begin(), inst->outlier_mask.end(), true));
  result.lambda_reg =
      config.model == RecoveryModel::kAsymmetric ? config.model_config().effective_lambda() : 0.0;
  result.ground_truth_objective = f->value(inst->flatten_ground_truth());
  result.initial_objective = f->value(x0);

  long long baseline = std::numeric_limits<int>::max();
  if (config.outer_iterations) {
    baseline = inner_calls_for_outer(InnerBudgetSchedule(), *config.outer_iterations);
  }
  if (config.oracle_calls) baseline = std::min(baseline, *config.oracle_calls);
  result.baseline_iterations = baseline;

  const bool record_time = config.timing || config.seconds.has_value();
  const RunContext ctx{config, *inst, *f, x0, baseline, record_time};

  const bool write = !config.output_dir.empty();
  const std::filesystem::path dir(config.output_dir);
  if (write) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoFailure("cannot create " + config.output_dir + ": " + ec.message());
  }

  std::vector<MethodTrace> traces;
  for (const MethodSpec& method : config.methods) {
    MethodOutcome outcome =
        method.is_hippa() ? run_hippa_method(method, ctx) : run_baseline_method(method, ctx);
    if (write) {
      write_file_atomic((dir / ("trace_" + method.file_stem() + ".csv")).string(),
                        trace_csv(outcome.trace));
    }
    traces.emplace_back(method.name(), outcome.trace);
    result.methods.push_back(std::move(outcome));
  }
  if (write) {
    write_file_atomic((dir / "plot_data.csv").string(), plot_data_csv(traces));
    write_file_atomic((dir / "summary.json").string(), summary_json(result));
  }
  return result;
}

std::string summary_json(const ExperimentResult& result) {
  const ExperimentConfig& c = result.config;
  nlohmann::ordered_json j;
  nlohmann::ordered_json cfg;
  cfg["model"] = to_string(c.model);
  cfg["n1"] = c.n1;
  cfg["n2"] = c.n2;
  cfg["r"] = c.r;
  cfg["p"] = c.p;
  cfg["gamma"] = c.gamma;
  cfg["theta"] = c.theta_ls;
  cfg["sigma"] = c.envelope_params().sigma;
  cfg["outliers"] = c.outlier_ratio;
  cfg["seed"] = c.seed;
  cfg["iters"] = c.outer_iterations ? nlohmann::ordered_json(*c.outer_iterations) : nullptr;
  cfg["seconds"] = c.seconds ? nlohmann::ordered_json(*c.seconds) : nullptr;
  cfg["oracle_calls"] = c.oracle_calls ? nlohmann::ordered_json(*c.oracle_calls) : nullptr;
  cfg["residual_tol"] = c.residual_tol;
  cfg["sgdss_lambda"] = c.sgdss_lambda;
  cfg["sgdss_q"] = c.sgdss_q;
  std::vector<std::string> names;
  for (const auto& m : c.methods) names.push_back(m.name());
  cfg["methods"] = names;
  j["config"] = std::move(cfg);

  nlohmann::ordered_json inst;
  inst["m"] = result.m;
  inst["outlier_count"] = result.outlier_count;
  if (c.model == RecoveryModel::kAsymmetric) inst["lambda_reg"] = result.lambda_reg;
  inst["objective_at_ground_truth"] = result.ground_truth_objective;
  j["instance"] = std::move(inst);

  j["initial_point"] = "i.i.d. standard normal entries from derive_seed(seed, 1)";
  j["initial_objective"] = result.initial_objective;
  j["baseline_iterations"] = result.baseline_iterations;
  j["objective_lower_bound"] = 0.0;

  nlohmann::ordered_json methods = nlohmann::ordered_json::array();
  bool certificates_hold = true;
  for (const MethodOutcome& m : result.methods) {
    nlohmann::ordered_json e;
    e["method"] = m.method.name();
    e["final_objective"] = number_or_null(m.final_objective);
    e["final_recovery_error"] = number_or_null(m.final_recovery_error);
    e["iterations"] = m.iterations;
    e["oracle_calls"] = m.oracle_calls;
    e["stop_reason"] = m.stop_reason;
    if (m.failure) {
      e["failure"] = *m.failure;
      e["failure_kind"] = std::string(to_string(m.failure_code));
    }
    if (m.method.is_hippa()) {
      e["fallbacks"] = m.fallbacks;
      nlohmann::ordered_json cert;
      cert["descent_holds"] = m.descent_holds;
      cert["min_descent_slack"] = m.min_descent_slack;
      cert["max_lyapunov_increase"] = m.max_lyapunov_increase;
      cert["telescoped_lhs"] = m.telescoped.lhs;
      cert["telescoped_rhs"] = m.telescoped.rhs;
      cert["telescoped_holds"] = m.telescoped.holds();
      cert["iteration_bound"] =
          m.iteration_bound ? number_or_null(*m.iteration_bound) : nlohmann::ordered_json(nullptr);
      cert["iteration_bound_holds"] = m.iteration_bound_holds;
      e["certificates"] = std::move(cert);
      if (!m.failure) {
        certificates_hold =
            certificates_hold && m.telescoped.holds() && m.iteration_bound_holds;
      }
    }
    methods.push_back(std::move(e));
  }
  j["methods"] = std::move(methods);
  j["certificates_hold"] = certificates_hold;
  return j.dump(2) + "\n";
}

}  // namespace home
