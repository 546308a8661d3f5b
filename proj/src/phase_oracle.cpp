#include "linecancel/phase_oracle.hpp"

#include <cmath>

#include "linecancel/errors.hpp"

namespace linecancel {

double accumulated_phase(const CPSequence& seq, const ModulationParams& mod) {
  if (mod.amplitude == 0.0) return 0.0;
  const auto edges = seq.segment_edges();
  double sum = 0.0;
  double sign = 1.0;
  double prev = std::sin(mod.phase);
  for (std::size_t j = 1; j < edges.size(); ++j) {
    const double next = std::sin(mod.omega_m * edges[j] + mod.phase);
    sum += sign * (next - prev);
    prev = next;
    sign = -sign;
  }
  return mod.amplitude / mod.omega_m * sum;
}

double phase_averaged_signal(const CPSequence& seq, const ModulationParams& mod, int n_phases) {
  if (n_phases < 64) throw DomainError("phase_averaged_signal: n_phases must be >= 64");
  if (mod.amplitude == 0.0) return 1.0;
  double acc = 0.0;
  for (int k = 0; k < n_phases; ++k) {
    ModulationParams m = mod;
    m.phase = kTwoPi * k / n_phases;
    acc += std::cos(accumulated_phase(seq, m));
  }
  return acc / n_phases;
}

double echo_signal_at_delay(const CPSequence& seq, double amplitude, double omega_m,
                            double phi0, double t_d) {
  const auto mod = ModulationParams::make(amplitude, omega_m, phi0 + omega_m * t_d);
  return std::cos(accumulated_phase(seq, mod));
}

double post_phase_correction(const CPSequence& seq, const ModulationParams& known) {
  return accumulated_phase(seq, known);
}

double corrected_signal(const CPSequence& seq, const ModulationParams& mod,
                        double analyzer_phase) {
  return std::cos(accumulated_phase(seq, mod) - analyzer_phase);
}

}  // namespace linecancel
