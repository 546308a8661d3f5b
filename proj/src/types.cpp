#include "linecancel/types.hpp"

#include <cmath>
#include <string>

#include "linecancel/errors.hpp"

namespace linecancel {

double wrap_phase(double angle) {
  double w = std::fmod(angle, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  // fmod of a value just below a multiple of 2pi can round up to 2pi.
  if (w >= kTwoPi) w = 0.0;
  return w;
}

ModulationParams ModulationParams::make(double amplitude, double omega_m, double phase) {
  if (!std::isfinite(amplitude) || amplitude < 0.0)
    throw DomainError("modulation amplitude must be finite and >= 0");
  if (!std::isfinite(omega_m) || omega_m <= 0.0)
    throw DomainError("modulation frequency must be finite and > 0");
  if (!std::isfinite(phase)) throw DomainError("modulation phase must be finite");
  return ModulationParams{amplitude, omega_m, wrap_phase(phase)};
}

ModulationParams ModulationParams::from_hz(double amplitude_hz, double f_m_hz, double phase) {
  return make(kTwoPi * amplitude_hz, kTwoPi * f_m_hz, phase);
}

CPSequence CPSequence::make(int n_pulses, double tau) {
  if (n_pulses < 0) throw DomainError("pulse count must be >= 0");
  if (!std::isfinite(tau) || tau <= 0.0) throw DomainError("tau must be finite and > 0");
  return CPSequence{n_pulses, tau};
}

std::vector<double> CPSequence::pulse_times() const {
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(n_pulses));
  for (int k = 1; k <= n_pulses; ++k)
    t.push_back(tau * static_cast<double>(2 * k - 1) / static_cast<double>(2 * n_pulses));
  return t;
}

std::vector<double> CPSequence::segment_edges() const {
  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(n_pulses) + 2);
  edges.push_back(0.0);
  for (double t : pulse_times()) edges.push_back(t);
  edges.push_back(tau);
  return edges;
}

RamseyTrace::RamseyTrace(std::vector<TracePoint> points) {
  points_.reserve(points.size());
  for (const auto& p : points) push_back(p);
}

void RamseyTrace::check_point(const TracePoint& p) {
  if (!std::isfinite(p.tau) || p.tau < 0.0) throw InputError("trace tau must be finite and >= 0");
  if (!std::isfinite(p.signal)) throw InputError("trace signal must be finite");
  if (p.shots < 0) throw InputError("trace shots must be >= 0");
  if (std::isnan(p.sigma) || p.sigma < 0.0) throw InputError("trace sigma must be >= 0");
  if (p.shots > 0 && !(p.sigma > 0.0))
    throw InputError("trace sigma must be > 0 for shot-sampled points");
  if (std::abs(p.signal) > 1.0 + 3.0 * p.sigma + 1e-12)
    throw InputError("trace signal " + std::to_string(p.signal) + " outside [-1, 1] by more than 3 sigma");
}

void RamseyTrace::push_back(const TracePoint& p) {
  check_point(p);
  if (!points_.empty() && !(p.tau > points_.back().tau))
    throw InputError("trace taus must be strictly increasing");
  points_.push_back(p);
}

std::vector<double> RamseyTrace::taus() const {
  std::vector<double> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.tau);
  return out;
}

std::vector<double> RamseyTrace::signals() const {
  std::vector<double> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.signal);
  return out;
}

HeatingModel HeatingModel::make(double nbar_dot, int fock_cutoff) {
  if (!std::isfinite(nbar_dot) || nbar_dot < 0.0)
    throw DomainError("heating rate must be finite and >= 0");
  if (fock_cutoff < 4) throw DomainError("fock cutoff must be >= 4");
  return HeatingModel{nbar_dot, fock_cutoff};
}

}  // namespace linecancel
