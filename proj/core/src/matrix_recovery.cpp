#include "home/matrix_recovery.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "home/random.hpp"

namespace home {

namespace {

const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Eigen::VectorXd signs(const Eigen::VectorXd& v) {
  return v.unaryExpr([](double e) { return sign(e); });
}

}  // namespace

std::string to_string(RecoveryModel model) {
  return model == RecoveryModel::kSymmetric ? "symmetric" : "asymmetric";
}

RecoveryModel parse_recovery_model(const std::string& text) {
  if (text == "symmetric" || text == "1") return RecoveryModel::kSymmetric;
  if (text == "asymmetric" || text == "2") return RecoveryModel::kAsymmetric;
  throw InvalidArgument("unknown recovery model '" + text + "'");
}

double default_balance_delta() { return kSqrt2OverPi / 6.3; }

double balance_lambda(double outlier_ratio, double delta) {
  return (2.0 * (1.0 - outlier_ratio) * (kSqrt2OverPi - delta) - (kSqrt2OverPi + delta)) /
         2.0;
}

double ModelConfig::effective_lambda() const {
  return lambda_reg.value_or(balance_lambda(outlier_ratio, delta));
}

void ModelConfig::validate() const {
  if (!(outlier_ratio >= 0.0 && outlier_ratio < 1.0)) {
    throw InvalidArgument("outlier ratio must lie in [0, 1)");
  }
  if (model == RecoveryModel::kAsymmetric) {
    const double lambda = effective_lambda();
    if (!(std::isfinite(lambda) && lambda > 0.0)) {
      throw InvalidArgument("balance weight lambda must be > 0 (got " +
                            std::to_string(lambda) + ")");
    }
  }
}

Eigen::MatrixXd RecoveryInstance::sensing_matrix(int i) const {
  return Eigen::Map<const Eigen::MatrixXd>(sensing.col(i).data(), n1, n2);
}

Eigen::MatrixXd RecoveryInstance::ground_truth() const {
  return config.model == RecoveryModel::kSymmetric ? Eigen::MatrixXd(U_t * U_t.transpose())
                                                   : Eigen::MatrixXd(U_t * V_t.transpose());
}

Eigen::Index RecoveryInstance::factor_dimension() const {
  return config.model == RecoveryModel::kSymmetric ? Eigen::Index(n1) * r
                                                   : Eigen::Index(n1 + n2) * r;
}

Point RecoveryInstance::flatten_ground_truth() const {
  Point x(factor_dimension());
  x.head(Eigen::Index(n1) * r) = Eigen::Map<const Eigen::VectorXd>(U_t.data(), U_t.size());
  if (config.model == RecoveryModel::kAsymmetric) {
    x.tail(Eigen::Index(n2) * r) = Eigen::Map<const Eigen::VectorXd>(V_t.data(), V_t.size());
  }
  return x;
}

Eigen::MatrixXd RecoveryInstance::assemble(const Point& factors) const {
  require_dimension(factors, factor_dimension(), "factor point");
  Eigen::Map<const Eigen::MatrixXd> U(factors.data(), n1, r);
  if (config.model == RecoveryModel::kSymmetric) return U * U.transpose();
  Eigen::Map<const Eigen::MatrixXd> V(factors.data() + Eigen::Index(n1) * r, n2, r);
  return U * V.transpose();
}

RecoveryInstance generate_instance(const ModelConfig& cfg, int n1, int n2, int r,
                                   std::uint64_t seed) {
  cfg.validate();
  if (n1 <= 0 || n2 <= 0 || r <= 0) throw InvalidArgument("dimensions must be positive");
  if (cfg.model == RecoveryModel::kSymmetric && n1 != n2) {
    throw InvalidArgument("symmetric model requires n1 == n2");
  }
  RecoveryInstance inst;
  inst.config = cfg;
  inst.n1 = n1;
  inst.n2 = n2;
  inst.r = r;
  inst.m = 5 * r * std::max(n1, n2);
  inst.seed = seed;

  Rng rng(seed);
  auto fill = [&rng](Eigen::MatrixXd& M) {
    for (Eigen::Index j = 0; j < M.size(); ++j) M.data()[j] = rng.normal();
  };
  inst.U_t.resize(n1, r);
  fill(inst.U_t);
  if (cfg.model == RecoveryModel::kAsymmetric) {
    inst.V_t.resize(n2, r);
    fill(inst.V_t);
  }
  inst.sensing.resize(Eigen::Index(n1) * n2, inst.m);
  fill(inst.sensing);

  const auto count = static_cast<int>(std::lround(cfg.outlier_ratio * inst.m));
  std::vector<int> order(inst.m);
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < count; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(inst.m - i)));
    std::swap(order[i], order[j]);
  }
  std::vector<int> positions(order.begin(), order.begin() + count);
  std::sort(positions.begin(), positions.end());
  inst.outlier_mask.assign(inst.m, false);
  inst.outliers = Eigen::VectorXd::Zero(inst.m);
  for (int pos : positions) {
    inst.outlier_mask[pos] = true;
    inst.outliers[pos] = 10.0 * rng.normal();
  }

  inst.y = measure(inst, inst.ground_truth()) + inst.outliers;
  return inst;
}

Eigen::VectorXd measure(const RecoveryInstance& inst, const Eigen::MatrixXd& X) {
  if (X.rows() != inst.n1 || X.cols() != inst.n2) {
    throw InvalidArgument("measured matrix has the wrong shape");
  }
  Eigen::Map<const Eigen::VectorXd> vx(X.data(), X.size());
  return inst.sensing.transpose() * vx;
}

double trace_inner_product(const Eigen::MatrixXd& A, const Eigen::MatrixXd& X) {
  return (X.transpose() * A).trace();
}

// ---------------------------------------------------------------------------

SymmetricRecoveryLoss::SymmetricRecoveryLoss(std::shared_ptr<const RecoveryInstance> inst)
    : inst_(std::move(inst)) {
  if (!inst_ || inst_->config.model != RecoveryModel::kSymmetric) {
    throw InvalidArgument("Phi needs a symmetric-model instance");
  }
}

Eigen::Index SymmetricRecoveryLoss::dimension() const { return inst_->factor_dimension(); }

double SymmetricRecoveryLoss::value(const Point& x) const {
  const Eigen::VectorXd residual = measure(*inst_, inst_->assemble(x)) - inst_->y;
  return residual.lpNorm<1>() / inst_->m;
}

Point SymmetricRecoveryLoss::subgradient(const Point& x) const { return evaluate(x).second; }

std::pair<double, Point> SymmetricRecoveryLoss::evaluate(const Point& x) const {
  const auto& in = *inst_;
  const Eigen::VectorXd residual = measure(in, in.assemble(x)) - in.y;
  const double v = residual.lpNorm<1>() / in.m;
  const Eigen::VectorXd gsum = in.sensing * signs(residual);
  Eigen::Map<const Eigen::MatrixXd> G(gsum.data(), in.n1, in.n2);
  Eigen::Map<const Eigen::MatrixXd> U(x.data(), in.n1, in.r);
  const Eigen::MatrixXd grad = (G + G.transpose()) * U / static_cast<double>(in.m);
  return {v, Eigen::Map<const Eigen::VectorXd>(grad.data(), grad.size())};
}

AsymmetricRecoveryLoss::AsymmetricRecoveryLoss(std::shared_ptr<const RecoveryInstance> inst)
    : inst_(std::move(inst)) {
  if (!inst_ || inst_->config.model != RecoveryModel::kAsymmetric) {
    throw InvalidArgument("Psi needs an asymmetric-model instance");
  }
  lambda_ = inst_->config.effective_lambda();
}

Eigen::Index AsymmetricRecoveryLoss::dimension() const { return inst_->factor_dimension(); }

double AsymmetricRecoveryLoss::value(const Point& x) const {
  const auto& in = *inst_;
  const Eigen::VectorXd residual = measure(in, in.assemble(x)) - in.y;
  Eigen::Map<const Eigen::MatrixXd> U(x.data(), in.n1, in.r);
  Eigen::Map<const Eigen::MatrixXd> V(x.data() + U.size(), in.n2, in.r);
  const Eigen::MatrixXd gram_gap = U.transpose() * U - V.transpose() * V;
  return residual.lpNorm<1>() / in.m + lambda_ * gram_gap.norm();
}

Point AsymmetricRecoveryLoss::subgradient(const Point& x) const { return evaluate(x).second; }

std::pair<double, Point> AsymmetricRecoveryLoss::evaluate(const Point& x) const {
  const auto& in = *inst_;
  const Eigen::VectorXd residual = measure(in, in.assemble(x)) - in.y;
  Eigen::Map<const Eigen::MatrixXd> U(x.data(), in.n1, in.r);
  Eigen::Map<const Eigen::MatrixXd> V(x.data() + U.size(), in.n2, in.r);
  const Eigen::MatrixXd gram_gap = U.transpose() * U - V.transpose() * V;
  const double gap_norm = gram_gap.norm();
  const double v = residual.lpNorm<1>() / in.m + lambda_ * gap_norm;

  const Eigen::VectorXd gsum = in.sensing * signs(residual);
  Eigen::Map<const Eigen::MatrixXd> G(gsum.data(), in.n1, in.n2);
  Point g(x.size());
  Eigen::Map<Eigen::MatrixXd> gU(g.data(), in.n1, in.r);
  Eigen::Map<Eigen::MatrixXd> gV(g.data() + U.size(), in.n2, in.r);
  gU.noalias() = G * V / static_cast<double>(in.m);
  gV.noalias() = G.transpose() * U / static_cast<double>(in.m);
  if (gap_norm > 0.0) {
    gU += (2.0 * lambda_ / gap_norm) * (U * gram_gap);
    gV -= (2.0 * lambda_ / gap_norm) * (V * gram_gap);
  }
  return {v, std::move(g)};
}

std::unique_ptr<ObjectiveOracle> phi_oracle(std::shared_ptr<const RecoveryInstance> inst) {
  return std::make_unique<SymmetricRecoveryLoss>(std::move(inst));
}

std::unique_ptr<ObjectiveOracle> psi_oracle(std::shared_ptr<const RecoveryInstance> inst) {
  return std::make_unique<AsymmetricRecoveryLoss>(std::move(inst));
}

std::unique_ptr<ObjectiveOracle> recovery_oracle(std::shared_ptr<const RecoveryInstance> inst) {
  if (!inst) throw InvalidArgument("null instance");
  return inst->config.model == RecoveryModel::kSymmetric ? phi_oracle(std::move(inst))
                                                         : psi_oracle(std::move(inst));
}

double recovery_error(const Point& factors, const RecoveryInstance& inst) {
  const Eigen::MatrixXd truth = inst.ground_truth();
  return (inst.assemble(factors) - truth).norm() / truth.norm();
}

// ---------------------------------------------------------------------------
// Instance files

namespace {

constexpr const char* kFormat = "home-recovery-instance";
constexpr int kVersion = 1;
constexpr const char* kGenerator = "mt19937_64/marsaglia-polar/v1";

}  // namespace

std::string instance_to_json(const RecoveryInstance& inst) {
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["generator"] = kGenerator;
  j["model"] = to_string(inst.config.model);
  j["n1"] = inst.n1;
  j["n2"] = inst.n2;
  j["r"] = inst.r;
  j["m"] = inst.m;
  j["seed"] = inst.seed;
  j["outlier_ratio"] = inst.config.outlier_ratio;
  j["delta"] = inst.config.delta;
  if (inst.config.lambda_reg) {
    j["lambda_reg"] = *inst.config.lambda_reg;
  } else {
    j["lambda_reg"] = nullptr;
  }
  j["outlier_count"] = std::count(inst.outlier_mask.begin(), inst.outlier_mask.end(), true);
  j["checksum"] = {{"y_sum", inst.y.sum()}, {"y_abs_sum", inst.y.lpNorm<1>()}};
  return j.dump(2) + "\n";
}

RecoveryInstance instance_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("instance file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) {
      throw InvalidArgument("not a recovery instance file");
    }
    if (j.at("version").get<int>() != kVersion) {
      throw InvalidArgument("unsupported instance file version");
    }
    ModelConfig cfg;
    cfg.model = parse_recovery_model(j.at("model").get<std::string>());
    cfg.outlier_ratio = j.at("outlier_ratio").get<double>();
    cfg.delta = j.at("delta").get<double>();
    if (!j.at("lambda_reg").is_null()) cfg.lambda_reg = j.at("lambda_reg").get<double>();
    RecoveryInstance inst =
        generate_instance(cfg, j.at("n1").get<int>(), j.at("n2").get<int>(),
                          j.at("r").get<int>(), j.at("seed").get<std::uint64_t>());
    const double y_sum = j.at("checksum").at("y_sum").get<double>();
    const double y_abs = j.at("checksum").at("y_abs_sum").get<double>();
    const double tol = 1e-12 * std::max(1.0, inst.y.lpNorm<1>());
    if (std::abs(inst.y.sum() - y_sum) > tol || std::abs(inst.y.lpNorm<1>() - y_abs) > tol) {
      throw InvalidArgument("regenerated instance does not match the stored checksum");
    }
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed instance file: ") + e.what());
  }
}

void save_instance(const RecoveryInstance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << instance_to_json(inst);
  if (!out) throw IoFailure("failed writing " + path);
}

RecoveryInstance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

}  // namespace home
