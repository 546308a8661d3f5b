#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "linecancel/types.hpp"

namespace linecancel {

inline constexpr int kDefaultFockCutoff = 10;

enum class Spin : int { kDown = 0, kUp = 1 };

/// Spin (x) motion density matrix, basis index spin * (cutoff + 1) + phonon.
class DensityMatrix {
 public:
  explicit DensityMatrix(int fock_cutoff);

  int fock_cutoff() const { return cutoff_; }
  int levels() const { return cutoff_ + 1; }
  int dim() const { return 2 * (cutoff_ + 1); }
  int index(Spin s, int phonon) const { return static_cast<int>(s) * levels() + phonon; }

  Eigen::MatrixXcd& matrix() { return rho_; }
  const Eigen::MatrixXcd& matrix() const { return rho_; }

  double trace() const;
  double mean_phonon() const;
  /// <sigma_z> = P(up) - P(down), traced over phonons.
  double sigma_z() const;
  double hermiticity_error() const;
  double min_eigenvalue() const;

 private:
  int cutoff_;
  Eigen::MatrixXcd rho_;
};

/// |down, 0><down, 0|.
DensityMatrix initial_state(int fock_cutoff = kDefaultFockCutoff);

/// Instantaneous blue-sideband rotation: each pair {|down,n>, |up,n+1>} turns by
/// angle * sqrt(n + 1) about the equatorial axis at `phase`. |up,0> and the
/// truncation-edge state |down,N> are untouched.
DensityMatrix sideband_pulse(const DensityMatrix& rho, double angle, double phase);

enum class Integrator {
  /// Fixed-step classical Runge-Kutta on the full master equation.
  kRungeKutta4,
  /// Closed-form propagation: the number-diagonal Hamiltonian commutes with the
  /// heating dissipator, so the modulation phase factors out and the dissipator
  /// is exponentiated per coherence order.
  kExact,
};

struct EvolutionOptions {
  Integrator integrator = Integrator::kRungeKutta4;
  /// Steps per shortest time scale (modulation period, 1 / nbar_dot).
  double steps_per_scale = 200.0;
};

/// Evolves for `duration` seconds starting at sequence time `t_start` under
/// H(t) = dw(t) a^dag a and the symmetric heating dissipator (rate nbar_dot on
/// both a and a^dag). Throws NumericError if the trace drifts by more than 1e-6.
DensityMatrix free_evolution(const DensityMatrix& rho, double duration,
                             const std::optional<ModulationParams>& mod,
                             const std::optional<HeatingModel>& heating,
                             double t_start = 0.0, const EvolutionOptions& options = {});

struct SequenceSpec {
  CPSequence seq;
  std::optional<ModulationParams> mod;
  std::optional<HeatingModel> heating;
  /// The ideal signal is cos(phi(tau) - analyzer_phase).
  double analyzer_phase = 0.0;
  /// Used when `heating` is empty; otherwise heating->fock_cutoff wins.
  int fock_cutoff = kDefaultFockCutoff;
};

/// Final state of the full pulse sequence for modulation phase `phi`.
DensityMatrix run_sequence_state(const SequenceSpec& spec, double phi,
                                 const EvolutionOptions& options = {});

/// Parity of the final spin state of a perfect sequence: +1 (up) for even
/// pulse counts, -1 (down) for odd ones.
int readout_sign(int n_pulses);

/// Sequence signal readout_sign(n) * <sigma_z> for modulation phase `phi`, so a
/// perfect sequence returns +1 for every n. Leakage into the dark state
/// |up, 0> therefore raises the signal for even n and lowers it for odd n.
double run_sequence(const SequenceSpec& spec, double phi, const EvolutionOptions& options = {});

/// run_sequence averaged over `n_phases` equally spaced modulation phases.
double run_sequence_averaged(const SequenceSpec& spec, int n_phases,
                             const EvolutionOptions& options = {});

/// C_heat(tau): the sequence with heating and no modulation, per grid point.
/// tau = 0 is allowed and returns 1.
std::vector<double> heating_envelope(int n_pulses, const HeatingModel& heating,
                                     const std::vector<double>& tau_grid,
                                     const EvolutionOptions& options = {});

struct ProductModelCurves {
  std::vector<double> tau;
  std::vector<double> c_heat;
  std::vector<double> c_0;
  std::vector<double> c_tot;
  std::vector<double> product;
  double max_abs_error = 0.0;
};

/// Compares the phase-averaged full simulation with C_heat * C_0.
ProductModelCurves product_model_curves(int n_pulses, const ModulationParams& mod,
                                        const HeatingModel& heating,
                                        const std::vector<double>& tau_grid, int n_phases = 64,
                                        const EvolutionOptions& options = {});

/// max over the grid of |C_tot - C_heat * C_0|.
double product_model_check(int n_pulses, const ModulationParams& mod, const HeatingModel& heating,
                           const std::vector<double>& tau_grid, int n_phases = 64,
                           const EvolutionOptions& options = {});

}  // namespace linecancel
