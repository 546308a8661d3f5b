#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "linecancel/envelope_cache.hpp"
#include "linecancel/levenberg_marquardt.hpp"
#include "linecancel/types.hpp"

namespace linecancel {

/// Best-fit parameters and 1-sigma uncertainties. Keys: "A_over_2pi" (Hz),
/// "phi_d" (rad), "nbar_dot" (1/s), "T_g" (s), "c0". Uncertainties are the
/// square roots of the (J^T W J)^-1 diagonal at the optimum; they are not
/// rescaled by chi2_reduced.
struct FitResult {
  std::map<std::string, double> params;
  std::map<std::string, double> sigmas;
  double chi2 = 0.0;
  double chi2_reduced = 0.0;
  int dof = 0;
  bool converged = false;
  int n_iterations = 0;
  /// Period of phi_d identifiability: pi when the echo signal cannot tell
  /// phi_d from phi_d + pi (zero analyzer phase), otherwise 2 pi.
  double phase_period = kTwoPi;
};

struct FitOptions {
  /// Heating envelope for the trace's pulse count; built on demand if null.
  std::shared_ptr<const HeatingEnvelopeCache> envelope;
  double nbar_dot_max = 40.0;
  double amplitude_max_hz = 1000.0;
  /// Analyzer phase the trace was recorded with (phase fits only).
  double analyzer_phase = 0.0;
  LmOptions lm;
};

/// sqrt((1 - s^2) / shots), clipped below at 1 / (2 shots).
double shot_noise_sigma(double signal, long shots);

/// Fits C_heat(tau; nbar_dot) * J0((A / omega_m) F_n(omega_m tau)) over
/// (A, nbar_dot). Points with infinite sigma are ignored.
FitResult fit_amplitude(const RamseyTrace& trace, int n_pulses, double f_m_hz,
                        const FitOptions& options = {});

/// Fits a line-triggered echo trace to cos(phi(tau; A, phi_d) - analyzer) * C_heat
/// over (A, phi_d, nbar_dot). Multi-start over 8 initial phases. phi_d is
/// reported in [0, phase_period).
FitResult fit_phase(const RamseyTrace& trace, double f_m_hz, const FitOptions& options = {});

struct DelayPhase {
  double t_d = 0.0;
  double phi_d = 0.0;
  double sigma = 0.0;
};

struct SlopeResult {
  double slope = 0.0;  // rad/s
  double sigma = 0.0;
  double intercept = 0.0;
  double intercept_sigma = 0.0;
  double chi2_reduced = 0.0;
  /// Set when some successive gap could not be assigned a branch at 2 sigma.
  bool ambiguous = false;
  std::vector<double> unwrapped;
};

/// Weighted linear fit of unwrapped phi_d against t_d. Phases are unwrapped
/// in delay order onto the branch nearest the previous point, modulo `period`.
/// Needs at least two points; the slope sigma is meaningful from three.
SlopeResult fit_phase_slope(std::vector<DelayPhase> delays, double period = kTwoPi);

/// Fits c0 * exp(-(tau / T_g)^2) over (c0, T_g).
FitResult fit_gaussian_envelope(const RamseyTrace& trace, const LmOptions& lm = {});

}  // namespace linecancel
