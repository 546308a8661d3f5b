#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "linecancel/envelope_cache.hpp"
#include "linecancel/phasor_cancel.hpp"
#include "linecancel/types.hpp"

namespace linecancel {

enum class Mode : int { kX = 0, kY = 1 };

const char* mode_name(Mode mode);

struct ModeTruth {
  double freq_hz = 1.2e6;
  double nbar_dot = 15.0;
};

/// Slow secular-frequency wander (Ornstein-Uhlenbeck), in Hz.
struct DriftModel {
  double sigma_f_hz = 0.0;
  double tau_c_s = 10.0;
  /// Both modes follow one process when set.
  bool common_mode = true;
};

/// Hidden ground truth of the simulated experiment.
///
/// The ambient tone is `noise_phasor` in the set-point plane (volts). A
/// set-point phasor P modulates mode X by |P| / r, with r in mV/Hz; other modes
/// scale with their secular frequency. `trigger_phase` is the modulation phase
/// at the line trigger with no compensation applied.
struct LabTruth {
  Phasor noise_phasor = Phasor::polar(0.014, 102.0 * kTwoPi / 360.0);
  double transfer_r_mv_per_hz = 0.38;
  double trigger_phase = 0.0;
  double f_line_hz = 60.0;
  double line_jitter_hz = 1.0;
  bool burst_retrigger = true;
  std::array<ModeTruth, 2> modes{ModeTruth{1.2e6, 15.0}, ModeTruth{1.27e6, 15.0}};
  DriftModel drift;
  int fock_cutoff = kDefaultFockCutoff;
  /// Minimum lab time between shot starts.
  double shot_period_s = 0.05;
  std::uint64_t rng_seed = 1;

  /// Throws InputError on invalid fields.
  void validate() const;
  const ModeTruth& mode(Mode m) const { return modes[static_cast<int>(m)]; }
};

struct ShotRequest {
  Mode mode = Mode::kX;
  CPSequence seq;
  /// Trigger delay; none means free running (uniform line phase per shot).
  std::optional<double> t_d;
  double analyzer_phase = 0.0;
  long shots = 100;
  std::optional<Phasor> compensation;
};

/// One Ornstein-Uhlenbeck step, exact for any dt >= 0.
double ou_drift_step(double state, double dt, double sigma_f, double tau_c, std::mt19937_64& rng);

struct MonitorTrace {
  std::vector<double> time_s;
  /// Single-shot outcomes (0 or 1), one series per requested mode, taken
  /// in alternation.
  std::map<Mode, std::vector<int>> outcomes;
};

/// Mean of consecutive groups of `bin` outcomes.
std::vector<double> bin_outcomes(const std::vector<int>& outcomes, std::size_t bin);

/// A simulated experiment with its own RNG streams and lab clock. Requests are
/// processed in order; a Lab is not shared between threads.
class Lab {
 public:
  explicit Lab(LabTruth truth);

  /// Runs req.shots shots and returns the mean signal 2 <P1> - 1 with its
  /// shot-noise sigma.
  TracePoint run_shots(const ShotRequest& req);

  /// run_shots at each tau with the other request fields held fixed.
  RamseyTrace run_trace(ShotRequest req, const std::vector<double>& taus);

  /// Ramsey (n = 0) single shots at fixed wait time, alternating between modes.
  MonitorTrace monitor_trace(const std::vector<Mode>& modes, double wait_time, double duration_s,
                             double shot_period);

  /// Secular-frequency modulation amplitude A / 2pi (Hz) for a set-point phasor.
  double amplitude_hz(Mode mode, const Phasor& setpoint_phasor) const;

  const LabTruth& truth() const { return truth_; }
  double clock() const { return clock_; }

 private:
  double drift_hz(Mode mode);
  double shot_signal(const ShotRequest& req, double drift);
  const HeatingEnvelopeCache& envelope(int n_pulses);

  LabTruth truth_;
  std::mt19937_64 shot_rng_;
  std::mt19937_64 drift_rng_;
  double clock_ = 0.0;
  double drift_time_ = 0.0;
  std::array<double, 2> drift_state_{};
  std::map<int, std::unique_ptr<HeatingEnvelopeCache>> envelopes_;
};

/// First tau at which the trace falls through `threshold` (linear
/// interpolation between the bracketing points). Throws DomainError when the
/// trace never crosses.
double coherence_time(const RamseyTrace& trace, double threshold = 0.36787944117144233);

}  // namespace linecancel
