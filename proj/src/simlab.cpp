#include "linecancel/simlab.hpp"

#include <cmath>
#include <string>

#include "linecancel/errors.hpp"
#include "linecancel/estimator.hpp"
#include "linecancel/phase_oracle.hpp"
#include "linecancel/signal_model.hpp"

namespace linecancel {
namespace {

// Fixed offsets so that the shot and drift streams differ for one seed.
constexpr std::uint64_t kShotStream = 0x5851f42d4c957f2dULL;
constexpr std::uint64_t kDriftStream = 0x14057b7ef767814fULL;

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

const char* mode_name(Mode mode) { return mode == Mode::kX ? "X" : "Y"; }

void LabTruth::validate() const {
  auto fail = [](const std::string& what) { throw InputError("scenario: " + what); };
  if (!finite_positive(transfer_r_mv_per_hz)) fail("transfer_r must be > 0");
  if (!std::isfinite(noise_phasor.value.real()) || !std::isfinite(noise_phasor.value.imag()))
    fail("noise phasor must be finite");
  if (!std::isfinite(trigger_phase)) fail("trigger_phase must be finite");
  if (!finite_positive(f_line_hz)) fail("f_line must be > 0");
  if (!(line_jitter_hz >= 0.0) || line_jitter_hz >= f_line_hz) fail("line_jitter must be in [0, f_line)");
  for (const auto& m : modes) {
    if (!finite_positive(m.freq_hz)) fail("mode frequency must be > 0");
    if (!(m.nbar_dot >= 0.0) || !std::isfinite(m.nbar_dot)) fail("nbar_dot must be >= 0");
  }
  if (!(drift.sigma_f_hz >= 0.0) || !std::isfinite(drift.sigma_f_hz)) fail("drift sigma_f must be >= 0");
  if (!finite_positive(drift.tau_c_s)) fail("drift tau_c must be > 0");
  if (fock_cutoff < 4) fail("fock_cutoff must be >= 4");
  if (!(shot_period_s >= 0.0) || !std::isfinite(shot_period_s)) fail("shot_period must be >= 0");
}

double ou_drift_step(double state, double dt, double sigma_f, double tau_c, std::mt19937_64& rng) {
  if (!(dt >= 0.0)) throw DomainError("ou_drift_step: dt must be >= 0");
  if (!(tau_c > 0.0)) throw DomainError("ou_drift_step: tau_c must be > 0");
  const double decay = std::exp(-dt / tau_c);
  if (sigma_f == 0.0) return state * decay;
  std::normal_distribution<double> normal;
  return state * decay + sigma_f * std::sqrt(-std::expm1(-2.0 * dt / tau_c)) * normal(rng);
}

std::vector<double> bin_outcomes(const std::vector<int>& outcomes, std::size_t bin) {
  if (bin == 0) throw DomainError("bin_outcomes: bin must be >= 1");
  std::vector<double> out;
  for (std::size_t i = 0; i + bin <= outcomes.size(); i += bin) {
    double s = 0.0;
    for (std::size_t k = i; k < i + bin; ++k) s += outcomes[k];
    out.push_back(s / static_cast<double>(bin));
  }
  return out;
}

Lab::Lab(LabTruth truth)
    : truth_(std::move(truth)),
      shot_rng_(truth_.rng_seed ^ kShotStream),
      drift_rng_(truth_.rng_seed ^ kDriftStream) {
  truth_.validate();
  // Start the drift in its stationary distribution.
  std::normal_distribution<double> normal;
  drift_state_[0] = truth_.drift.sigma_f_hz * normal(drift_rng_);
  drift_state_[1] = truth_.drift.common_mode ? drift_state_[0] : truth_.drift.sigma_f_hz * normal(drift_rng_);
}

double Lab::amplitude_hz(Mode mode, const Phasor& setpoint_phasor) const {
  const double r_v_per_hz = truth_.transfer_r_mv_per_hz * 1e-3;
  const double ratio = truth_.mode(mode).freq_hz / truth_.modes[0].freq_hz;
  return setpoint_phasor.magnitude() / r_v_per_hz * ratio;
}

double Lab::drift_hz(Mode mode) {
  const double dt = clock_ - drift_time_;
  drift_time_ = clock_;
  const auto& d = truth_.drift;
  drift_state_[0] = ou_drift_step(drift_state_[0], dt, d.sigma_f_hz, d.tau_c_s, drift_rng_);
  if (d.common_mode) {
    drift_state_[1] = drift_state_[0];
  } else {
    drift_state_[1] = ou_drift_step(drift_state_[1], dt, d.sigma_f_hz, d.tau_c_s, drift_rng_);
  }
  return drift_state_[static_cast<int>(mode)];
}

const HeatingEnvelopeCache& Lab::envelope(int n_pulses) {
  auto& slot = envelopes_[n_pulses];
  if (!slot) slot = std::make_unique<HeatingEnvelopeCache>(n_pulses, truth_.fock_cutoff);
  return *slot;
}

double Lab::shot_signal(const ShotRequest& req, double drift) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double df = truth_.line_jitter_hz * unit(shot_rng_);
  const double f_shot = truth_.f_line_hz + df;
  const double omega = kTwoPi * f_shot;

  // Set-point phasor seen by the ion: ambient tone plus the injected tone,
  // whose phase slips against the line when its frequency wanders.
  std::complex<double> total = truth_.noise_phasor.value;
  if (req.compensation) {
    const double t_d = req.t_d.value_or(0.0);
    const double slip = truth_.burst_retrigger ? kTwoPi * df / truth_.f_line_hz
                                               : kTwoPi * df * (t_d + req.seq.tau);
    total += req.compensation->value * std::polar(1.0, slip);
  }
  const double amp_hz = amplitude_hz(req.mode, Phasor{total});

  double phase;
  if (req.t_d) {
    const double offset = std::abs(total) > 0.0 ? std::arg(total) - std::arg(truth_.noise_phasor.value) : 0.0;
    phase = truth_.trigger_phase + offset + omega * *req.t_d;
  } else {
    std::uniform_real_distribution<double> uniform(0.0, kTwoPi);
    phase = uniform(shot_rng_);
  }
  const auto mod = ModulationParams::make(kTwoPi * amp_hz, omega, wrap_phase(phase));
  const double static_phase = kTwoPi * drift * toggling_integral(req.seq);
  const double coherent = std::cos(accumulated_phase(req.seq, mod) + static_phase - req.analyzer_phase);
  const double heat = envelope(req.seq.n_pulses)(req.seq.tau, truth_.mode(req.mode).nbar_dot);
  return heat * coherent;
}

TracePoint Lab::run_shots(const ShotRequest& req) {
  if (req.shots < 1) throw InputError("run_shots: shots must be >= 1");
  if (req.t_d && !(*req.t_d >= 0.0)) throw InputError("run_shots: t_d must be >= 0");
  const double duration = req.t_d.value_or(0.0) + req.seq.tau;
  const double step = std::max(truth_.shot_period_s, duration);
  long ups = 0;
  for (long s = 0; s < req.shots; ++s) {
    const double drift = drift_hz(req.mode);
    const double p1 = std::clamp(signal_to_population(shot_signal(req, drift)), 0.0, 1.0);
    std::bernoulli_distribution outcome(p1);
    ups += outcome(shot_rng_) ? 1 : 0;
    clock_ += step;
  }
  TracePoint pt;
  pt.tau = req.seq.tau;
  pt.shots = req.shots;
  pt.signal = population_to_signal(static_cast<double>(ups) / static_cast<double>(req.shots));
  pt.sigma = shot_noise_sigma(pt.signal, req.shots);
  return pt;
}

RamseyTrace Lab::run_trace(ShotRequest req, const std::vector<double>& taus) {
  RamseyTrace trace;
  for (double tau : taus) {
    req.seq = CPSequence::make(req.seq.n_pulses, tau);
    trace.push_back(run_shots(req));
  }
  return trace;
}

MonitorTrace Lab::monitor_trace(const std::vector<Mode>& modes, double wait_time, double duration_s,
                                double shot_period) {
  if (modes.empty()) throw InputError("monitor_trace: no modes requested");
  if (!(duration_s > 0.0) || !(shot_period > 0.0)) throw InputError("monitor_trace: bad timing");
  MonitorTrace out;
  ShotRequest req;
  req.seq = CPSequence::make(0, wait_time);
  req.shots = 1;
  // Quarter-fringe analyzer puts the drift-free operating point at P1 = 1/2.
  req.analyzer_phase = kTwoPi / 4.0;
  const double start = clock_;
  while (clock_ - start < duration_s) {
    const double t = clock_ - start;
    out.time_s.push_back(t);
    for (Mode m : modes) {
      req.mode = m;
      const double drift = drift_hz(m);
      const double p1 = std::clamp(signal_to_population(shot_signal(req, drift)), 0.0, 1.0);
      std::bernoulli_distribution outcome(p1);
      out.outcomes[m].push_back(outcome(shot_rng_) ? 1 : 0);
    }
    clock_ = start + t + shot_period;
  }
  return out;
}

double coherence_time(const RamseyTrace& trace, double threshold) {
  const auto& pts = trace.points();
  if (pts.empty()) throw DomainError("coherence_time: empty trace");
  if (pts[0].signal < threshold) throw DomainError("coherence_time: trace starts below threshold");
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i].signal < threshold) {
      const double a = pts[i - 1].signal;
      const double b = pts[i].signal;
      return pts[i - 1].tau + (a - threshold) / (a - b) * (pts[i].tau - pts[i - 1].tau);
    }
  }
  throw DomainError("coherence_time: no threshold crossing within the trace");
}

}  // namespace linecancel
