#pragma once

// Robust low-rank matrix recovery benchmark.
//
// Measurements y_i = <A_i, X_t> + s_i, i = 1..m, m = 5 r max(n1, n2), with
// i.i.d. standard normal A_i and a fraction o of gross outliers s_i.
//
//   symmetric:   Phi(U)    = (1/m) ||y - A(U U^T)||_1,                U in R^{n x r}
//   asymmetric:  Psi(U, V) = (1/m) ||y - A(U V^T)||_1
//                            + lambda ||U^T U - V^T V||_F,           U in R^{n1 x r}, V in R^{n2 x r}
//
// Factor layout inside a Point: column-major (column-stacking) vec(U), and
// for the asymmetric model [vec(U); vec(V)].

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "home/envelope.hpp"

namespace home {

enum class RecoveryModel { kSymmetric, kAsymmetric };

std::string to_string(RecoveryModel model);
RecoveryModel parse_recovery_model(const std::string& text);

/// sqrt(2/pi) / 6.3.
double default_balance_delta();

/// [2(1-o)(sqrt(2/pi) - delta) - (sqrt(2/pi) + delta)] / 2.
double balance_lambda(double outlier_ratio, double delta);

struct ModelConfig {
  RecoveryModel model = RecoveryModel::kSymmetric;
  double outlier_ratio = 0.3;
  /// Explicit balance weight; derived from (outlier_ratio, delta) when unset.
  std::optional<double> lambda_reg;
  double delta = default_balance_delta();

  double effective_lambda() const;
  void validate() const;
};

struct RecoveryInstance {
  ModelConfig config;
  int n1 = 0;
  int n2 = 0;
  int r = 0;
  int m = 0;
  std::uint64_t seed = 0;

  /// (n1*n2) x m; column i is vec(A_i) in column-major order.
  Eigen::MatrixXd sensing;
  Eigen::VectorXd y;
  Eigen::VectorXd outliers;
  std::vector<bool> outlier_mask;
  Eigen::MatrixXd U_t;
  Eigen::MatrixXd V_t;  // empty for the symmetric model

  Eigen::MatrixXd sensing_matrix(int i) const;
  Eigen::MatrixXd ground_truth() const;
  /// Length of a flattened factor point.
  Eigen::Index factor_dimension() const;
  Point flatten_ground_truth() const;
  /// X = U U^T or U V^T rebuilt from a flattened point.
  Eigen::MatrixXd assemble(const Point& factors) const;
};

/// Draw order from one Rng(seed) stream: U_t, then V_t (asymmetric), then
/// the m sensing matrices entry by entry in column-major order, then the
/// outlier positions (partial Fisher-Yates), then the outlier values
/// (10 * standard normal, i.e. variance 100) in ascending position order.
RecoveryInstance generate_instance(const ModelConfig& cfg, int n1, int n2, int r,
                                   std::uint64_t seed);

/// A(X): all m measurements <A_i, X> as one matrix-vector product.
Eigen::VectorXd measure(const RecoveryInstance& inst, const Eigen::MatrixXd& X);

/// <A, X> = tr(X^T A), computed directly.
double trace_inner_product(const Eigen::MatrixXd& A, const Eigen::MatrixXd& X);

/// Phi for the symmetric model.
class SymmetricRecoveryLoss final : public ObjectiveOracle {
 public:
  explicit SymmetricRecoveryLoss(std::shared_ptr<const RecoveryInstance> inst);

  Eigen::Index dimension() const override;
  double value(const Point& x) const override;
  Point subgradient(const Point& x) const override;
  std::pair<double, Point> evaluate(const Point& x) const override;
  std::optional<double> lower_bound_hint() const override { return 0.0; }

 private:
  std::shared_ptr<const RecoveryInstance> inst_;
};

/// Psi for the asymmetric model.
class AsymmetricRecoveryLoss final : public ObjectiveOracle {
 public:
  explicit AsymmetricRecoveryLoss(std::shared_ptr<const RecoveryInstance> inst);

  Eigen::Index dimension() const override;
  double value(const Point& x) const override;
  Point subgradient(const Point& x) const override;
  std::pair<double, Point> evaluate(const Point& x) const override;
  std::optional<double> lower_bound_hint() const override { return 0.0; }

  double lambda() const { return lambda_; }

 private:
  std::shared_ptr<const RecoveryInstance> inst_;
  double lambda_;
};

std::unique_ptr<ObjectiveOracle> phi_oracle(std::shared_ptr<const RecoveryInstance> inst);
std::unique_ptr<ObjectiveOracle> psi_oracle(std::shared_ptr<const RecoveryInstance> inst);
/// Whichever of the two matches the instance model.
std::unique_ptr<ObjectiveOracle> recovery_oracle(std::shared_ptr<const RecoveryInstance> inst);

/// ||X_hat - X_t||_F / ||X_t||_F.
double recovery_error(const Point& factors, const RecoveryInstance& inst);

/// Instance files store the generating configuration and seed plus a
/// checksum of y; loading regenerates the data and verifies the checksum.
std::string instance_to_json(const RecoveryInstance& inst);
RecoveryInstance instance_from_json(const std::string& text);
void save_instance(const RecoveryInstance& inst, const std::string& path);
RecoveryInstance load_instance(const std::string& path);

}  // namespace home
