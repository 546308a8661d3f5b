#pragma once

#include "linecancel/types.hpp"

namespace linecancel {

/// Phase accumulated under dw(t) = A cos(omega_m t + phi), with the sign of each
/// free-evolution segment set by the toggling function. Evaluated from the
/// per-segment antiderivatives (A / omega_m) sin(omega_m t + phi).
double accumulated_phase(const CPSequence& seq, const ModulationParams& mod);

/// Mean of cos(accumulated_phase) over `n_phases` equally spaced modulation
/// phases in [0, 2 pi). Requires n_phases >= 64.
double phase_averaged_signal(const CPSequence& seq, const ModulationParams& mod,
                             int n_phases = 4096);

/// Line-triggered signal: the modulation phase at the first pulse is
/// phi0 + omega_m * t_d.
double echo_signal_at_delay(const CPSequence& seq, double amplitude, double omega_m,
                            double phi0, double t_d);

/// Analyzer-phase offset that cancels the predicted accumulated phase. With
/// the analyzer convention cos(phi(tau) - analyzer_phase), applying this
/// correction to an exact model gives signal 1.
double post_phase_correction(const CPSequence& seq, const ModulationParams& known);

/// Signal with an analyzer phase applied: cos(phi(tau) - analyzer_phase).
double corrected_signal(const CPSequence& seq, const ModulationParams& mod,
                        double analyzer_phase);

}  // namespace linecancel
