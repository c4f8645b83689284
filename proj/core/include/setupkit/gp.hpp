// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace setupkit {

/// Squared-exponential ARD kernel parameters. Lengthscales are in the
/// model's input units (standardized unless standardization is off).
struct GpHyperparams {
  std::vector<double> lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-10;

  /// Throws std::invalid_argument on non-finite or out-of-domain values.
  void validate() const;
};

struct Prediction {
  double mu = 0.0;
  /// Predictive standard deviation, including observation noise.
  double v = 0.0;
};

inline constexpr double kNoiseFloor = 1e-10;

struct GpFitOptions {
  int starts = 3;
  int max_iterations = 150;
  std::uint64_t seed = 0;
  bool standardize = true;
  /// Skip optimization and use these values.
  std::optional<GpHyperparams> fixed;
  /// Extra optimizer start, e.g. the previous fit in an iterative loop.
  std::optional<GpHyperparams> warm_start;
};

/// Exact GP regression. Immutable after fit(); const members are safe to
/// call concurrently.
class GpModel {
 public:
  /// Rows of x are samples. Throws DimensionMismatch, std::invalid_argument
  /// for fewer than two rows, SingularKernel when the Gram matrix cannot be
  /// factorized even with jitter.
  static GpModel fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpFitOptions& options = {});

  /// Throws DimensionMismatch when the column count differs from training.
  std::vector<Prediction> predict(const Eigen::MatrixXd& x) const;
  Prediction predict_one(const Eigen::VectorXd& x) const;

  const GpHyperparams& hyperparams() const { return hyper_; }
  double log_marginal_likelihood() const { return lml_; }
  /// Diagonal jitter that made the Gram matrix factorizable.
  double jitter() const { return jitter_; }
  /// ||L L^T - K||_F / ||K||_F for the stored factorization.
  double factorization_error() const { return factor_error_; }
  int dimension() const { return static_cast<int>(x_raw_.cols()); }
  int size() const { return static_cast<int>(x_raw_.rows()); }

  /// Plain-text dump: header, standardization, hyperparameters, training
  /// data. load() refactorizes, so predictions match the saved model.
  void save(std::ostream& out) const;
  static GpModel load(std::istream& in);

 private:
  GpModel() = default;
  void factorize();
  Eigen::VectorXd transform(const Eigen::VectorXd& x) const;

  Eigen::MatrixXd x_raw_;
  Eigen::VectorXd y_raw_;
  bool standardize_ = true;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
  double y_mean_ = 0.0;
  GpHyperparams hyper_;

  Eigen::MatrixXd xs_;       // standardized inputs scaled by 1 / lengthscale
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
  double factor_error_ = 0.0;
  double lml_ = 0.0;
};

namespace detail {

/// Log marginal likelihood of centered targets y under (x, hyper), with the
/// gradient with respect to (log l_1..log l_d, log s^2, log sn^2) when grad
/// is non-null. Returns -inf when the Gram matrix is not positive definite.
double gp_log_marginal_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                  const GpHyperparams& hyper, Eigen::VectorXd* grad);

}  // namespace detail

}  // namespace setupkit
