#pragma once

#include <functional>

#include <Eigen/Dense>

namespace linecancel {

struct LmOptions {
  int max_iterations = 300;
  /// Central-difference step relative to max(|x_i|, 1).
  double relative_step = 1e-6;
  /// Stop once an accepted step lowers chi^2 by less than this fraction.
  double tolerance = 1e-13;
};

struct LmResult {
  Eigen::VectorXd params;
  /// (J^T J)^-1 at the optimum, J the Jacobian of the weighted residuals.
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Weighted residuals r(x); chi^2 = |r|^2.
using ResidualFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Levenberg-Marquardt with Marquardt diagonal scaling and a numerical
/// Jacobian. Parameters are projected onto [lower, upper] after every step;
/// the difference stencil turns one-sided at an active bound.
LmResult levenberg_marquardt(const ResidualFunction& residuals, const Eigen::VectorXd& start,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const LmOptions& options = {});

}  // namespace linecancel
