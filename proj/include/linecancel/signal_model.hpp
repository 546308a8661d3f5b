#pragma once

#include <complex>

#include "linecancel/types.hpp"

namespace linecancel {

/// Toggling function y_n(t): (-1)^k with k the number of pulses at or before t.
/// Throws DomainError for t outside [0, tau].
int toggling_value(const CPSequence& seq, double t);

/// Closed-form filter value F_n(theta) for n = 0..3. Throws DomainError otherwise;
/// use filter_F_general for longer sequences.
double filter_F(int n, double theta);

/// Signed-segment integral  omega_m * integral_0^tau y_n(t) exp(i omega_m t) dt,
/// summed segment by segment in closed form.
std::complex<double> segment_response(const CPSequence& seq, double omega_m);

/// |segment_response|: the filter value for any pulse count. Agrees with
/// |filter_F| for n <= 3.
double filter_F_general(const CPSequence& seq, double omega_m);

/// Phase-averaged Ramsey signal J0((A / omega_m) * F_n(omega_m * tau)).
/// The modulation phase is ignored.
double analytic_signal(const CPSequence& seq, const ModulationParams& mod);

/// Integral of y_n over [0, tau], segment-exact. Multiplies a static detuning.
double toggling_integral(const CPSequence& seq);

}  // namespace linecancel
