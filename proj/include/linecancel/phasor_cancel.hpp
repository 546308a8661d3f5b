#pragma once

#include <complex>
#include <vector>

namespace linecancel {

/// A 60 Hz sinusoid as a complex amplitude. Magnitudes are in volts.
struct Phasor {
  std::complex<double> value;

  static Phasor polar(double magnitude, double angle);
  double magnitude() const { return std::abs(value); }
  /// Angle in [0, 2 pi).
  double angle() const;
};

struct TrialRecord {
  Phasor injected;
  double residual_amplitude_hz = 0.0;
  /// 1-sigma of the measured amplitude; 0 means unknown (uniform weights).
  double residual_sigma_hz = 0.0;
};

/// Minimizer (V u, r) of sum_i [|V u - V_i u_i| - r A_i]^2.
///
/// Injecting V u cancels the ambient tone, so `compensation` = V u and the
/// ambient noise is `noise_phasor` = -V u. Angles are reported for -u.
struct CancelSolution {
  Phasor noise_phasor;
  Phasor compensation;
  double scale_r_mv_per_hz = 0.0;
  double residual_cost = 0.0;
  /// 1-sigma from the covariance at the optimum; zero when the trial count
  /// leaves no degrees of freedom and no residual sigmas were given.
  double magnitude_sigma_v = 0.0;
  double angle_sigma = 0.0;
  double scale_r_sigma = 0.0;
};

/// Needs >= 3 trials whose injections are not collinear (IllPosedError);
/// a non-positive scale optimum raises DegenerateDataError.
CancelSolution solve_phasor(const std::vector<TrialRecord>& trials);

/// |injected - V u| / r, in Hz.
double predict_residual(const CancelSolution& solution, const Phasor& injected);

/// Set-point gain per Hz of secular frequency for f_sec proportional to the
/// set-point: setpoint / secular_freq, returned in mV/Hz.
double setpoint_scale(double secular_freq_hz, double setpoint_v);

}  // namespace linecancel
