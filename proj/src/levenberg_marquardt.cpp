#include "linecancel/levenberg_marquardt.hpp"

#include <algorithm>
#include <cmath>

#include "linecancel/errors.hpp"

namespace linecancel {
namespace {

Eigen::VectorXd clamp(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

Eigen::MatrixXd jacobian(const ResidualFunction& f, const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                         const Eigen::VectorXd& hi, const Eigen::VectorXd& r0, double rel_step) {
  const Eigen::Index p = x.size();
  Eigen::MatrixXd j(r0.size(), p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double h = rel_step * std::max(std::abs(x(i)), 1.0);
    Eigen::VectorXd up = x;
    Eigen::VectorXd down = x;
    if (x(i) - h < lo(i)) {
      up(i) += h;
      j.col(i) = (f(up) - r0) / h;
    } else if (x(i) + h > hi(i)) {
      down(i) -= h;
      j.col(i) = (r0 - f(down)) / h;
    } else {
      up(i) += h;
      down(i) -= h;
      j.col(i) = (f(up) - f(down)) / (2.0 * h);
    }
  }
  return j;
}

}  // namespace

LmResult levenberg_marquardt(const ResidualFunction& residuals, const Eigen::VectorXd& start,
                             const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                             const LmOptions& options) {
  if (start.size() != lower.size() || start.size() != upper.size())
    throw DomainError("levenberg_marquardt: bound dimensions do not match");
  LmResult out;
  Eigen::VectorXd x = clamp(start, lower, upper);
  Eigen::VectorXd r = residuals(x);
  double chi2 = r.squaredNorm();
  if (!std::isfinite(chi2)) throw NumericError("levenberg_marquardt: non-finite residuals at start");
  double lambda = 1e-3;
  Eigen::MatrixXd j = jacobian(residuals, x, lower, upper, r, options.relative_step);

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd grad = j.transpose() * r;
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-12 * std::max(1.0, jtj.diagonal().maxCoeff()));

    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      const Eigen::VectorXd trial = clamp(x + step, lower, upper);
      const Eigen::VectorXd r_trial = residuals(trial);
      const double chi2_trial = r_trial.squaredNorm();
      if (std::isfinite(chi2_trial) && chi2_trial < chi2) {
        const double gain = chi2 - chi2_trial;
        const bool tiny_step = (trial - x).norm() <= 1e-14 * (x.norm() + 1e-14);
        x = trial;
        r = r_trial;
        chi2 = chi2_trial;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (gain <= options.tolerance * chi2 || chi2 < 1e-30 || tiny_step) {
          out.converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No downhill step at any damping: already at a (possibly bounded) minimum.
      out.converged = true;
    }
    j = jacobian(residuals, x, lower, upper, r, options.relative_step);
    if (out.converged) break;
  }

  out.params = x;
  out.chi2 = chi2;
  out.iterations = it + 1;
  const Eigen::MatrixXd jtj = j.transpose() * j;
  out.covariance = jtj.completeOrthogonalDecomposition().pseudoInverse();
  return out;
}

}  // namespace linecancel
