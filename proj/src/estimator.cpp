#include "linecancel/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "linecancel/bessel.hpp"
#include "linecancel/errors.hpp"
#include "linecancel/phase_oracle.hpp"
#include "linecancel/signal_model.hpp"

namespace linecancel {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct WeightedData {
  std::vector<double> tau;
  std::vector<double> signal;
  std::vector<double> weight;  // 1 / sigma
};

WeightedData usable_points(const RamseyTrace& trace) {
  WeightedData d;
  for (const auto& p : trace.points()) {
    if (std::isinf(p.sigma)) continue;
    d.tau.push_back(p.tau);
    d.signal.push_back(p.signal);
    // sigma == 0 marks exact model data; give it unit weight.
    d.weight.push_back(p.sigma > 0.0 ? 1.0 / p.sigma : 1.0);
  }
  if (d.tau.empty()) throw InputError("fit: every point has infinite sigma");
  return d;
}

void require_points(const WeightedData& d, std::size_t min_points, const char* what) {
  if (d.tau.size() < min_points)
    throw InputError(std::string(what) + ": need at least " + std::to_string(min_points) +
                     " usable points, got " + std::to_string(d.tau.size()));
}

std::shared_ptr<const HeatingEnvelopeCache> envelope_for(const FitOptions& options, int n_pulses) {
  if (options.envelope) {
    if (options.envelope->n_pulses() != n_pulses)
      throw InputError("fit: envelope cache built for a different pulse count");
    return options.envelope;
  }
  return std::make_shared<HeatingEnvelopeCache>(n_pulses);
}

void fill_result(FitResult& out, const LmResult& lm, const std::vector<std::string>& names,
                 std::size_t n_points) {
  out.chi2 = lm.chi2;
  out.dof = static_cast<int>(n_points) - static_cast<int>(names.size());
  out.chi2_reduced = out.dof > 0 ? lm.chi2 / out.dof : lm.chi2;
  out.converged = lm.converged;
  out.n_iterations = lm.iterations;
  for (std::size_t i = 0; i < names.size(); ++i) {
    out.params[names[i]] = lm.params(static_cast<Eigen::Index>(i));
    const double var = lm.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    out.sigmas[names[i]] = std::sqrt(std::max(var, 0.0));
  }
}

// Profile chi^2 with parameter i pinned at `value` and the others refitted.
double profile_chi2(const ResidualFunction& f, const Eigen::VectorXd& x, Eigen::Index i, double value,
                    const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  const Eigen::Index p = x.size();
  auto expand = [&](const Eigen::VectorXd& rest) {
    Eigen::VectorXd y(p);
    for (Eigen::Index k = 0, m = 0; k < p; ++k) y(k) = k == i ? value : rest(m++);
    return y;
  };
  Eigen::VectorXd rest(p - 1), rlo(p - 1), rhi(p - 1);
  for (Eigen::Index k = 0, m = 0; k < p; ++k) {
    if (k == i) continue;
    rest(m) = x(k);
    rlo(m) = lo(k);
    rhi(m) = hi(k);
    ++m;
  }
  LmOptions opts;
  opts.max_iterations = 50;
  return levenberg_marquardt([&](const Eigen::VectorXd& r) { return f(expand(r)); }, rest, rlo, rhi, opts).chi2;
}

// Near A = 0 the model is even in A, the covariance understates the spread
// and the sampling distribution piles up at the bound. There sigma_A is the
// wider of the covariance value and the profile-likelihood half-widths
// (delta chi^2 = 1) on either side; if A = 0 itself is within delta chi^2 = 1
// the lower half-width is A.
void amplitude_sigma_fallback(FitResult& out, const ResidualFunction& f, const LmResult& lm,
                              const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  double& s = out.sigmas["A_over_2pi"];
  const double a = lm.params(0);
  if (a > 3.0 * s && s > 0.0) return;
  auto rise = [&](double value) { return profile_chi2(f, lm.params, 0, value, lo, hi) - lm.chi2 - 1.0; };

  double step = std::max({s, 1e-3 * std::max(1.0, a), 0.05});
  double up = step;
  while (rise(std::min(a + up, hi(0))) < 0.0 && a + up < hi(0)) up *= 2.0;
  double inner = up / 2.0 > step ? up / 2.0 : 0.0;
  for (int k = 0; k < 40; ++k) {
    const double mid = 0.5 * (inner + up);
    (rise(a + mid) < 0.0 ? inner : up) = mid;
  }
  double down = a;
  if (a > 0.0 && rise(0.0) >= 0.0) {
    double in = 0.0, out_w = a;
    for (int k = 0; k < 40; ++k) {
      const double mid = 0.5 * (in + out_w);
      (rise(a - mid) < 0.0 ? in : out_w) = mid;
    }
    down = out_w;
  }
  s = std::max({s, up, down});
}

}  // namespace

double shot_noise_sigma(double signal, long shots) {
  if (shots <= 0) throw DomainError("shot_noise_sigma: shots must be positive");
  const double n = static_cast<double>(shots);
  const double s = std::clamp(signal, -1.0, 1.0);
  return std::max(std::sqrt((1.0 - s * s) / n), 1.0 / (2.0 * n));
}

FitResult fit_amplitude(const RamseyTrace& trace, int n_pulses, double f_m_hz,
                        const FitOptions& options) {
  if (!(f_m_hz > 0.0)) throw InputError("fit_amplitude: f_m must be positive");
  const WeightedData d = usable_points(trace);
  require_points(d, 8, "fit_amplitude");
  const auto env = envelope_for(options, n_pulses);
  const double omega = kTwoPi * f_m_hz;

  // Filter values scaled so that the Bessel argument is A_hz * scale_j.
  std::vector<double> scale(d.tau.size());
  for (std::size_t j = 0; j < d.tau.size(); ++j)
    scale[j] = filter_F_general(CPSequence::make(n_pulses, d.tau[j]), omega) / f_m_hz;

  auto residuals = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(d.tau.size()));
    for (std::size_t j = 0; j < d.tau.size(); ++j) {
      const double model = (*env)(d.tau[j], x(1)) * bessel_j0(x(0) * scale[j]);
      r(static_cast<Eigen::Index>(j)) = (d.signal[j] - model) * d.weight[j];
    }
    return r;
  };

  // Coarse grid for the starting point.
  Eigen::VectorXd best(2);
  double best_chi2 = kInf;
  const double a_grid_max = std::min(options.amplitude_max_hz, 300.0);
  Eigen::VectorXd x(2);
  for (double a = 0.0; a <= a_grid_max; a += 1.0) {
    for (int k = 0; k <= 10; ++k) {
      x << a, options.nbar_dot_max * k / 10.0;
      const double c = residuals(x).squaredNorm();
      if (c < best_chi2) {
        best_chi2 = c;
        best = x;
      }
    }
  }

  Eigen::VectorXd lo(2), hi(2);
  lo << 0.0, 0.0;
  hi << options.amplitude_max_hz, options.nbar_dot_max;
  const LmResult lm = levenberg_marquardt(residuals, best, lo, hi, options.lm);
  FitResult out;
  fill_result(out, lm, {"A_over_2pi", "nbar_dot"}, d.tau.size());
  amplitude_sigma_fallback(out, residuals, lm, lo, hi);
  return out;
}

FitResult fit_phase(const RamseyTrace& trace, double f_m_hz, const FitOptions& options) {
  if (!(f_m_hz > 0.0)) throw InputError("fit_phase: f_m must be positive");
  const WeightedData d = usable_points(trace);
  require_points(d, 8, "fit_phase");
  const auto env = envelope_for(options, 1);
  const double omega = kTwoPi * f_m_hz;

  // phi(tau) = (A / omega) * (pc * cos phi_d + ps * sin phi_d).
  std::vector<double> pc(d.tau.size()), ps(d.tau.size());
  for (std::size_t j = 0; j < d.tau.size(); ++j) {
    const CPSequence seq = CPSequence::make(1, d.tau[j]);
    pc[j] = accumulated_phase(seq, ModulationParams::make(omega, omega, 0.0));
    ps[j] = accumulated_phase(seq, ModulationParams::make(omega, omega, kTwoPi / 4.0));
  }

  auto residuals = [&](const Eigen::VectorXd& x) {
    const double a = x(0) / f_m_hz;
    const double c = std::cos(x(1));
    const double s = std::sin(x(1));
    Eigen::VectorXd r(static_cast<Eigen::Index>(d.tau.size()));
    for (std::size_t j = 0; j < d.tau.size(); ++j) {
      const double phase = a * (pc[j] * c + ps[j] * s);
      const double model = (*env)(d.tau[j], x(2)) * std::cos(phase - options.analyzer_phase);
      r(static_cast<Eigen::Index>(j)) = (d.signal[j] - model) * d.weight[j];
    }
    return r;
  };

  Eigen::VectorXd lo(3), hi(3);
  lo << 0.0, -1e3, 0.0;
  hi << options.amplitude_max_hz, 1e3, options.nbar_dot_max;
  const double a_grid_max = std::min(options.amplitude_max_hz, 300.0);

  LmResult best;
  best.chi2 = kInf;
  for (int k = 0; k < 8; ++k) {
    const double phi = kTwoPi * k / 8.0;
    Eigen::VectorXd start(3);
    double start_chi2 = kInf;
    Eigen::VectorXd x(3);
    for (double a = 0.0; a <= a_grid_max; a += 2.0) {
      for (int m = 0; m <= 4; ++m) {
        x << a, phi, options.nbar_dot_max * m / 8.0;
        const double c = residuals(x).squaredNorm();
        if (c < start_chi2) {
          start_chi2 = c;
          start = x;
        }
      }
    }
    LmResult lm = levenberg_marquardt(residuals, start, lo, hi, options.lm);
    if (lm.chi2 < best.chi2) best = std::move(lm);
  }

  FitResult out;
  fill_result(out, best, {"A_over_2pi", "phi_d", "nbar_dot"}, d.tau.size());
  amplitude_sigma_fallback(out, residuals, best, lo, hi);
  // With the analyzer at 0 (mod pi) the signal is even in phi, so phi_d and
  // phi_d + pi fit equally well.
  const double analyzer_mod_pi = std::remainder(options.analyzer_phase, kTwoPi / 2.0);
  out.phase_period = std::abs(analyzer_mod_pi) < 1e-12 ? kTwoPi / 2.0 : kTwoPi;
  double phi = std::fmod(out.params["phi_d"], out.phase_period);
  if (phi < 0.0) phi += out.phase_period;
  out.params["phi_d"] = phi;
  return out;
}

SlopeResult fit_phase_slope(std::vector<DelayPhase> delays, double period) {
  if (delays.size() < 2) throw InputError("fit_phase_slope: need at least two delay points");
  if (!(period > 0.0)) throw InputError("fit_phase_slope: period must be positive");
  for (const auto& p : delays) {
    if (!std::isfinite(p.t_d) || !std::isfinite(p.phi_d) || !(p.sigma > 0.0) || !std::isfinite(p.sigma))
      throw InputError("fit_phase_slope: delays need finite t_d, phi_d and positive sigma");
  }
  std::sort(delays.begin(), delays.end(),
            [](const DelayPhase& a, const DelayPhase& b) { return a.t_d < b.t_d; });

  SlopeResult out;
  out.unwrapped.resize(delays.size());
  double first = std::fmod(delays[0].phi_d, period);
  if (first < 0.0) first += period;
  out.unwrapped[0] = first;
  for (std::size_t k = 1; k < delays.size(); ++k) {
    const double prev = out.unwrapped[k - 1];
    const double gap = std::remainder(delays[k].phi_d - prev, period);
    const double combined = std::hypot(delays[k].sigma, delays[k - 1].sigma);
    if (std::abs(gap) + 2.0 * combined >= period / 2.0) out.ambiguous = true;
    out.unwrapped[k] = prev + gap;
  }

  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < delays.size(); ++k) {
    const double w = 1.0 / (delays[k].sigma * delays[k].sigma);
    const double t = delays[k].t_d;
    sw += w;
    sx += w * t;
    sy += w * out.unwrapped[k];
    sxx += w * t * t;
    sxy += w * t * out.unwrapped[k];
  }
  const double det = sw * sxx - sx * sx;
  if (!(det > 0.0)) throw IllPosedError("fit_phase_slope: delays must not all coincide");
  out.slope = (sw * sxy - sx * sy) / det;
  out.intercept = (sxx * sy - sx * sxy) / det;
  out.sigma = std::sqrt(sw / det);
  out.intercept_sigma = std::sqrt(sxx / det);
  double chi2 = 0.0;
  for (std::size_t k = 0; k < delays.size(); ++k) {
    const double r = (out.unwrapped[k] - out.intercept - out.slope * delays[k].t_d) / delays[k].sigma;
    chi2 += r * r;
  }
  const int dof = static_cast<int>(delays.size()) - 2;
  out.chi2_reduced = dof > 0 ? chi2 / dof : 0.0;
  return out;
}

FitResult fit_gaussian_envelope(const RamseyTrace& trace, const LmOptions& lm_options) {
  const WeightedData d = usable_points(trace);
  require_points(d, 3, "fit_gaussian_envelope");

  auto residuals = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(d.tau.size()));
    for (std::size_t j = 0; j < d.tau.size(); ++j) {
      const double u = d.tau[j] / x(1);
      r(static_cast<Eigen::Index>(j)) = (d.signal[j] - x(0) * std::exp(-u * u)) * d.weight[j];
    }
    return r;
  };

  double c0 = 0.0;
  for (std::size_t j = 0; j < std::min<std::size_t>(3, d.tau.size()); ++j)
    c0 = std::max(c0, d.signal[j]);
  if (c0 <= 0.0) c0 = 1.0;
  double tg = d.tau.back();
  for (std::size_t j = 0; j < d.tau.size(); ++j) {
    if (d.signal[j] < c0 / std::exp(1.0) && d.tau[j] > 0.0) {
      tg = d.tau[j];
      break;
    }
  }
  if (!(tg > 0.0)) throw InputError("fit_gaussian_envelope: trace needs positive wait times");

  Eigen::VectorXd start(2), lo(2), hi(2);
  start << c0, tg;
  lo << 0.0, 1e-9;
  hi << 2.0, 1e3;
  const LmResult lm = levenberg_marquardt(residuals, start, lo, hi, lm_options);
  FitResult out;
  fill_result(out, lm, {"c0", "T_g"}, d.tau.size());
  return out;
}

}  // namespace linecancel
