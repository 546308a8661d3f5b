#pragma once

#include <vector>

#include "linecancel/quantum_sim.hpp"

namespace linecancel {

/// Tabulated heating envelope C_heat(tau; nbar_dot) for one pulse count.
///
/// With no modulation the heating-only sequence depends on tau and nbar_dot
/// only through x = nbar_dot * tau, so one table over x covers every rate.
/// Entries come from the exact density-matrix propagator; lookups interpolate
/// linearly in x and hold the last value beyond `x_max`.
class HeatingEnvelopeCache {
 public:
  explicit HeatingEnvelopeCache(int n_pulses, int fock_cutoff = kDefaultFockCutoff,
                                double x_max = 8.0, int points = 1025);

  double operator()(double tau, double nbar_dot) const;

  int n_pulses() const { return n_pulses_; }
  int fock_cutoff() const { return fock_cutoff_; }
  double x_max() const { return x_max_; }

 private:
  int n_pulses_;
  int fock_cutoff_;
  double x_max_;
  double dx_;
  std::vector<double> table_;
};

}  // namespace linecancel
