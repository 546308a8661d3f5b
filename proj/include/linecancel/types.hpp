#pragma once

#include <cstddef>
#include <numbers>
#include <vector>

namespace linecancel {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps an angle into [0, 2*pi).
double wrap_phase(double angle);

/// Sinusoidal secular-frequency shift  dw(t) = amplitude * cos(omega_m * t + phase).
///
/// `amplitude` and `omega_m` are angular frequencies (rad/s); report
/// amplitude / 2pi in Hz. Construct through `make` to get validated,
/// phase-normalized values.
struct ModulationParams {
  double amplitude = 0.0;
  double omega_m = kTwoPi * 60.0;
  double phase = 0.0;

  static ModulationParams make(double amplitude, double omega_m, double phase = 0.0);
  /// Convenience constructor taking A/2pi and f_m in Hz.
  static ModulationParams from_hz(double amplitude_hz, double f_m_hz, double phase = 0.0);

  double amplitude_hz() const { return amplitude / kTwoPi; }
};

/// Carr-Purcell sequence: `n_pulses` refocusing pi pulses evenly spread over
/// a total free-evolution time `tau`. n_pulses == 0 is plain Ramsey.
struct CPSequence {
  int n_pulses = 1;
  double tau = 0.0;

  static CPSequence make(int n_pulses, double tau);

  /// Pulse k (1-based) sits at tau * (2k - 1) / (2n).
  std::vector<double> pulse_times() const;
  /// Segment boundaries 0, t_1, ..., t_n, tau.
  std::vector<double> segment_edges() const;
};

struct TracePoint {
  double tau = 0.0;
  double signal = 0.0;
  long shots = 0;
  double sigma = 0.0;
};

/// Ramsey signal <sigma_z> versus free-evolution time.
class RamseyTrace {
 public:
  RamseyTrace() = default;
  explicit RamseyTrace(std::vector<TracePoint> points);

  /// Appends a point; taus must be strictly increasing.
  void push_back(const TracePoint& p);

  const std::vector<TracePoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const TracePoint& operator[](std::size_t i) const { return points_[i]; }

  std::vector<double> taus() const;
  std::vector<double> signals() const;

 private:
  static void check_point(const TracePoint& p);
  std::vector<TracePoint> points_;
};

/// Motional heating at `nbar_dot` phonons per second, simulated in a Fock
/// space truncated at `fock_cutoff`.
struct HeatingModel {
  double nbar_dot = 0.0;
  int fock_cutoff = 10;

  static HeatingModel make(double nbar_dot, int fock_cutoff = 10);
};

/// P1 = (1 + <sigma_z>) / 2.
inline double signal_to_population(double signal) { return 0.5 * (1.0 + signal); }
inline double population_to_signal(double p1) { return 2.0 * p1 - 1.0; }

}  // namespace linecancel
