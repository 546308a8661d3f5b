#include "linecancel/phasor_cancel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "linecancel/errors.hpp"
#include "linecancel/levenberg_marquardt.hpp"
#include "linecancel/parallel.hpp"
#include "linecancel/types.hpp"

namespace linecancel {
namespace {

using cd = std::complex<double>;

// Scale in V/Hz internally; reported in mV/Hz.
struct Problem {
  std::vector<cd> p;
  std::vector<double> a;
  std::vector<double> w;  // per-term weight

  double conditional_r(cd c) const {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      num += w[i] * std::abs(c - p[i]) * a[i];
      den += w[i] * a[i] * a[i];
    }
    return num / den;
  }

  double cost(cd c, double r) const {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double e = std::abs(c - p[i]) - r * a[i];
      s += w[i] * e * e;
    }
    return s;
  }

  double profile(cd c) const { return cost(c, conditional_r(c)); }
};

cd grid_search(const Problem& pr, double v_max) {
  constexpr int kAngles = 360;
  constexpr int kMagnitudes = 100;
  std::array<cd, kAngles> best_c{};
  std::array<double, kAngles> best_f{};
  parallel_for(kAngles, [&](std::size_t k) {
    const cd u = std::polar(1.0, kTwoPi * static_cast<double>(k) / kAngles);
    best_f[k] = std::numeric_limits<double>::infinity();
    for (int m = 0; m < kMagnitudes; ++m) {
      const cd c = u * (v_max * m / (kMagnitudes - 1));
      const double f = pr.profile(c);
      if (f < best_f[k]) {
        best_f[k] = f;
        best_c[k] = c;
      }
    }
  });
  const auto it = std::min_element(best_f.begin(), best_f.end());
  return best_c[static_cast<std::size_t>(it - best_f.begin())];
}

cd nelder_mead(const Problem& pr, cd start, double step) {
  std::array<cd, 3> x{start, start + step, start + cd(0.0, step)};
  std::array<double, 3> f{};
  for (int i = 0; i < 3; ++i) f[i] = pr.profile(x[i]);
  for (int it = 0; it < 5000; ++it) {
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int i, int j) { return f[i] < f[j]; });
    const int b = idx[0], m = idx[1], w = idx[2];
    const double size = std::max(std::abs(x[m] - x[b]), std::abs(x[w] - x[b]));
    if (size <= 1e-15 * (std::abs(x[b]) + step)) break;
    const cd centroid = 0.5 * (x[b] + x[m]);
    const cd xr = centroid + (centroid - x[w]);
    const double fr = pr.profile(xr);
    if (fr < f[b]) {
      const cd xe = centroid + 2.0 * (centroid - x[w]);
      const double fe = pr.profile(xe);
      if (fe < fr) {
        x[w] = xe;
        f[w] = fe;
      } else {
        x[w] = xr;
        f[w] = fr;
      }
    } else if (fr < f[m]) {
      x[w] = xr;
      f[w] = fr;
    } else {
      const cd xc = fr < f[w] ? centroid + 0.5 * (xr - centroid) : centroid + 0.5 * (x[w] - centroid);
      const double fc = pr.profile(xc);
      if (fc < std::min(fr, f[w])) {
        x[w] = xc;
        f[w] = fc;
      } else {
        for (int i : {m, w}) {
          x[i] = x[b] + 0.5 * (x[i] - x[b]);
          f[i] = pr.profile(x[i]);
        }
      }
    }
  }
  return x[static_cast<std::size_t>(std::min_element(f.begin(), f.end()) - f.begin())];
}

void check_geometry(const std::vector<TrialRecord>& trials) {
  if (trials.size() < 3) throw IllPosedError("solve_phasor: need at least 3 trials");
  double scale = 0.0;
  for (const auto& t : trials) {
    if (!std::isfinite(t.injected.value.real()) || !std::isfinite(t.injected.value.imag()) ||
        !(t.residual_amplitude_hz >= 0.0) || !std::isfinite(t.residual_amplitude_hz) ||
        !(t.residual_sigma_hz >= 0.0))
      throw InputError("solve_phasor: trial values must be finite and non-negative");
    scale = std::max(scale, std::abs(t.injected.value));
  }
  const cd p0 = trials[0].injected.value;
  double area = 0.0;
  for (std::size_t j = 1; j < trials.size(); ++j) {
    for (std::size_t k = j + 1; k < trials.size(); ++k) {
      const cd a = trials[j].injected.value - p0;
      const cd b = trials[k].injected.value - p0;
      area = std::max(area, std::abs(a.real() * b.imag() - a.imag() * b.real()));
    }
  }
  if (!(scale > 0.0) || area <= 1e-9 * scale * scale)
    throw IllPosedError("solve_phasor: injected phasors are collinear");
}

}  // namespace

Phasor Phasor::polar(double magnitude, double angle) {
  if (!(magnitude >= 0.0) || !std::isfinite(magnitude) || !std::isfinite(angle))
    throw DomainError("Phasor: magnitude must be finite and >= 0");
  return Phasor{std::polar(magnitude, angle)};
}

double Phasor::angle() const { return wrap_phase(std::arg(value)); }

CancelSolution solve_phasor(const std::vector<TrialRecord>& trials) {
  check_geometry(trials);
  Problem pr;
  double v_max = 0.0;
  bool have_sigmas = true;
  for (const auto& t : trials) {
    pr.p.push_back(t.injected.value);
    pr.a.push_back(t.residual_amplitude_hz);
    pr.w.push_back(1.0);
    v_max = std::max(v_max, std::abs(t.injected.value));
    have_sigmas = have_sigmas && t.residual_sigma_hz > 0.0;
  }
  double sum_a2 = 0.0;
  for (double a : pr.a) sum_a2 += a * a;
  if (!(sum_a2 > 0.0)) throw DegenerateDataError("solve_phasor: all residual amplitudes are zero");

  cd c{};
  double r = 0.0;
  const int passes = have_sigmas ? 3 : 1;
  for (int pass = 0; pass < passes; ++pass) {
    if (pass > 0) {
      for (std::size_t i = 0; i < trials.size(); ++i) {
        const double s = r * trials[i].residual_sigma_hz;
        pr.w[i] = 1.0 / (s * s);
      }
    }
    // Coarser, wider grids catch ambient tones much larger than the injections.
    c = grid_search(pr, 2.0 * v_max);
    for (double range : {4.0 * v_max, 8.0 * v_max, 16.0 * v_max}) {
      const cd wide = grid_search(pr, range);
      if (pr.profile(wide) < pr.profile(c)) c = wide;
    }
    c = nelder_mead(pr, c, 0.02 * v_max);
    r = pr.conditional_r(c);
    if (!(r > 0.0)) throw DegenerateDataError("solve_phasor: scale optimum is not positive");
  }

  // Gauss-Newton polish over (x, y, r) for the covariance.
  const auto n = static_cast<Eigen::Index>(trials.size());
  auto residuals = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd e(n);
    const cd cc(x(0), x(1));
    for (Eigen::Index i = 0; i < n; ++i)
      e(i) = std::sqrt(pr.w[i]) * (std::abs(cc - pr.p[i]) - x(2) * pr.a[i]);
    return e;
  };
  Eigen::VectorXd x0(3), lo(3), hi(3);
  x0 << c.real(), c.imag(), r;
  const double big = std::numeric_limits<double>::max();
  lo << -big, -big, 0.0;
  hi << big, big, big;
  LmOptions lm_opts;
  lm_opts.relative_step = 1e-7;
  const LmResult lm = levenberg_marquardt(residuals, x0, lo, hi, lm_opts);
  if (lm.chi2 <= pr.cost(c, r)) {
    c = cd(lm.params(0), lm.params(1));
    r = lm.params(2);
  }
  if (!(r > 0.0)) throw DegenerateDataError("solve_phasor: scale optimum is not positive");

  CancelSolution out;
  out.compensation = Phasor{c};
  out.noise_phasor = Phasor{-c};
  out.scale_r_mv_per_hz = r * 1e3;
  out.residual_cost = pr.cost(c, r);

  const int dof = static_cast<int>(trials.size()) - 3;
  double var_scale = 1.0;
  if (!have_sigmas) var_scale = dof > 0 ? out.residual_cost / dof : 0.0;
  const Eigen::Matrix3d cov = lm.covariance * var_scale;
  const double v = std::abs(c);
  if (v > 0.0) {
    const Eigen::Vector2d radial(c.real() / v, c.imag() / v);
    const Eigen::Vector2d tangential(-c.imag() / v, c.real() / v);
    const Eigen::Matrix2d cxy = cov.topLeftCorner<2, 2>();
    out.magnitude_sigma_v = std::sqrt(std::max(0.0, radial.dot(cxy * radial)));
    out.angle_sigma = std::sqrt(std::max(0.0, tangential.dot(cxy * tangential))) / v;
  } else {
    out.magnitude_sigma_v = std::sqrt(std::max(0.0, cov(0, 0)));
    out.angle_sigma = kTwoPi / 2.0;
  }
  out.scale_r_sigma = std::sqrt(std::max(0.0, cov(2, 2))) * 1e3;
  return out;
}

double predict_residual(const CancelSolution& solution, const Phasor& injected) {
  return std::abs(injected.value - solution.compensation.value) / (solution.scale_r_mv_per_hz * 1e-3);
}

double setpoint_scale(double secular_freq_hz, double setpoint_v) {
  if (!(secular_freq_hz > 0.0) || !(setpoint_v > 0.0))
    throw DomainError("setpoint_scale: inputs must be positive");
  return setpoint_v / secular_freq_hz * 1e3;
}

}  // namespace linecancel
