#include "linecancel/signal_model.hpp"

#include <cmath>
#include <string>

#include "linecancel/bessel.hpp"
#include "linecancel/errors.hpp"

namespace linecancel {

int toggling_value(const CPSequence& seq, double t) {
  if (!(t >= 0.0 && t <= seq.tau))
    throw DomainError("toggling_value: t = " + std::to_string(t) + " outside [0, tau]");
  int flips = 0;
  for (double tp : seq.pulse_times()) {
    if (tp <= t) ++flips;
  }
  return (flips % 2 == 0) ? 1 : -1;
}

double filter_F(int n, double theta) {
  switch (n) {
    case 0:
      return 2.0 * std::sin(theta / 2.0);
    case 1: {
      const double s = std::sin(theta / 4.0);
      return 4.0 * s * s;
    }
    case 2: {
      const double s = std::sin(theta / 8.0);
      return 8.0 * s * s * std::sin(theta / 4.0);
    }
    case 3: {
      const double s = std::sin(theta / 12.0);
      return 4.0 * s * s * (2.0 * std::cos(theta / 3.0) - 1.0);
    }
    default:
      throw DomainError("filter_F: closed form only for n <= 3, got n = " + std::to_string(n));
  }
}

std::complex<double> segment_response(const CPSequence& seq, double omega_m) {
  const auto edges = seq.segment_edges();
  double re = 0.0;
  double im = 0.0;
  double sign = 1.0;
  for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
    const double a = omega_m * edges[j];
    const double b = omega_m * edges[j + 1];
    // (exp(ib) - exp(ia)) / i
    re += sign * (std::sin(b) - std::sin(a));
    im += sign * (std::cos(a) - std::cos(b));
    sign = -sign;
  }
  return {re, im};
}

double filter_F_general(const CPSequence& seq, double omega_m) {
  return std::abs(segment_response(seq, omega_m));
}

double analytic_signal(const CPSequence& seq, const ModulationParams& mod) {
  if (mod.amplitude == 0.0) return 1.0;
  const double f = seq.n_pulses <= 3 ? filter_F(seq.n_pulses, mod.omega_m * seq.tau)
                                     : filter_F_general(seq, mod.omega_m);
  return bessel_j0(mod.amplitude / mod.omega_m * f);
}

double toggling_integral(const CPSequence& seq) {
  const auto edges = seq.segment_edges();
  double sum = 0.0;
  double sign = 1.0;
  for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
    sum += sign * (edges[j + 1] - edges[j]);
    sign = -sign;
  }
  return sum;
}

}  // namespace linecancel
