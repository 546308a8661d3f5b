#include "workflow.hpp"

#include <cmath>
#include <cstdio>

#include "linecancel/bessel.hpp"
#include "linecancel/errors.hpp"
#include "linecancel/io.hpp"
#include "linecancel/phase_oracle.hpp"
#include "linecancel/quantum_sim.hpp"
#include "linecancel/signal_model.hpp"

namespace linecancel::cli {
namespace {

using nlohmann::json;

constexpr double kPi = kTwoPi / 2.0;
constexpr double kDeg = kTwoPi / 360.0;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Ambient noise in the set-point plane for a target X-mode amplitude.
Phasor noise_for_amplitude(double amplitude_hz, double r_mv_per_hz, double angle_deg) {
  return Phasor::polar(amplitude_hz * r_mv_per_hz * 1e-3, angle_deg * kDeg);
}

double fitted_model(const HeatingEnvelopeCache& env, int n, double f_m, double a_hz, double nbar_dot,
                    double tau) {
  if (tau == 0.0) return 1.0;
  const double f = filter_F_general(CPSequence::make(n, tau), kTwoPi * f_m);
  return env(tau, nbar_dot) * bessel_j0(a_hz / f_m * f);
}

std::vector<double> fine_grid(double tau_max, int points) {
  std::vector<double> g(static_cast<std::size_t>(points) + 1);
  for (int i = 0; i <= points; ++i) g[i] = tau_max * i / points;
  return g;
}

void write(const std::filesystem::path& dir, const std::string& name, const std::string& content,
           std::vector<std::string>& written) {
  write_file_atomic(dir / name, content);
  written.push_back(name);
}

std::vector<std::string> figure2(const std::string& id, int n, const std::filesystem::path& dir, LabTruth truth) {
  std::vector<std::string> written;
  Lab lab(truth);
  SimulateOptions sim;
  sim.n_pulses = n;
  const RamseyTrace trace = simulate(lab, sim);
  auto env = std::make_shared<HeatingEnvelopeCache>(n, truth.fock_cutoff);
  FitOptions fo;
  fo.envelope = env;
  const FitResult fit = fit_amplitude(trace, n, truth.f_line_hz, fo);

  const double a_true = lab.amplitude_hz(Mode::kX, truth.noise_phasor);
  const double nd_true = truth.mode(Mode::kX).nbar_dot;
  std::string curves = "tau_s,fit,truth_model,heating_envelope\n";
  for (double tau : fine_grid(sim.tau_max, 1000)) {
    curves += fmt(tau) + "," +
              fmt(fitted_model(*env, n, truth.f_line_hz, fit.params.at("A_over_2pi"), fit.params.at("nbar_dot"), tau)) +
              "," + fmt(fitted_model(*env, n, truth.f_line_hz, a_true, nd_true, tau)) + "," +
              fmt((*env)(tau, fit.params.at("nbar_dot"))) + "\n";
  }
  json j = fit_to_json(fit);
  j["truth"] = {{"A_over_2pi", a_true}, {"nbar_dot", nd_true}};
  j["n_pulses"] = n;
  write(dir, id + "_data.csv", trace_to_csv(trace), written);
  write(dir, id + "_curves.csv", curves, written);
  write(dir, id + "_fit.json", j.dump(2) + "\n", written);
  return written;
}

std::vector<std::string> figure3a(const std::filesystem::path& dir, LabTruth truth) {
  std::vector<std::string> written;
  Lab lab(truth);
  const double t_d = 0.002;
  SimulateOptions sim;
  sim.t_d = t_d;
  const RamseyTrace trace = simulate(lab, sim);
  auto env = std::make_shared<HeatingEnvelopeCache>(1, truth.fock_cutoff);
  FitOptions fo;
  fo.envelope = env;
  const FitResult fit = fit_phase(trace, truth.f_line_hz, fo);
  const double a = fit.params.at("A_over_2pi");
  const double phi = fit.params.at("phi_d");
  const double nd = fit.params.at("nbar_dot");

  // Passive correction: the analyzer follows the predicted phase, so the
  // corrected signal should sit on the heating envelope.
  const auto known = ModulationParams::from_hz(a, truth.f_line_hz, phi);
  RamseyTrace verify;
  for (double tau : tau_grid(0.1, 40)) {
    const CPSequence seq = CPSequence::make(1, tau);
    ShotRequest req;
    req.seq = seq;
    req.t_d = t_d;
    req.shots = 150;
    req.analyzer_phase = post_phase_correction(seq, known);
    verify.push_back(lab.run_shots(req));
  }

  std::string curves = "tau_s,fit,heating_envelope\n";
  for (double tau : fine_grid(0.1, 1000)) {
    double model = 1.0;
    if (tau > 0.0) model = (*env)(tau, nd) * std::cos(accumulated_phase(CPSequence::make(1, tau), known));
    curves += fmt(tau) + "," + fmt(model) + "," + fmt((*env)(tau, nd)) + "\n";
  }
  json j = fit_to_json(fit);
  j["t_d_s"] = t_d;
  j["phi_d_over_pi"] = phi / kPi;
  write(dir, "fig3a_data.csv", trace_to_csv(trace), written);
  write(dir, "fig3a_verify.csv", trace_to_csv(verify), written);
  write(dir, "fig3a_curves.csv", curves, written);
  write(dir, "fig3a_fit.json", j.dump(2) + "\n", written);
  return written;
}

std::vector<std::string> figure3b(const std::filesystem::path& dir, LabTruth truth) {
  std::vector<std::string> written;
  Lab lab(truth);
  auto env = std::make_shared<HeatingEnvelopeCache>(1, truth.fock_cutoff);
  FitOptions fo;
  fo.envelope = env;
  std::string table = "mode,t_d_s,A_over_2pi,A_sigma,phi_d,phi_sigma,unwrapped_phi_d\n";
  json slopes;
  for (Mode mode : {Mode::kX, Mode::kY}) {
    std::vector<DelayPhase> delays;
    std::vector<FitResult> fits;
    for (int k = 0; k <= 8; ++k) {
      SimulateOptions sim;
      sim.mode = mode;
      sim.t_d = 0.002 * k;
      const FitResult fit = fit_phase(simulate(lab, sim), truth.f_line_hz, fo);
      delays.push_back({*sim.t_d, fit.params.at("phi_d"), fit.sigmas.at("phi_d")});
      fits.push_back(fit);
    }
    const SlopeResult s = fit_phase_slope(delays, kPi);
    for (std::size_t k = 0; k < delays.size(); ++k) {
      table += std::string(mode_name(mode)) + "," + fmt(delays[k].t_d) + "," + fmt(fits[k].params.at("A_over_2pi")) +
               "," + fmt(fits[k].sigmas.at("A_over_2pi")) + "," + fmt(delays[k].phi_d) + "," +
               fmt(delays[k].sigma) + "," + fmt(s.unwrapped[k]) + "\n";
    }
    slopes[mode_name(mode)] = {{"slope_rad_per_s", s.slope},
                               {"slope_sigma", s.sigma},
                               {"slope_over_2pi_hz", s.slope / kTwoPi},
                               {"intercept", s.intercept},
                               {"chi2_reduced", s.chi2_reduced},
                               {"ambiguous", s.ambiguous}};
  }
  write(dir, "fig3b_phases.csv", table, written);
  write(dir, "fig3b_slopes.json", slopes.dump(2) + "\n", written);
  return written;
}

std::vector<std::string> figure4b(const std::filesystem::path& dir, LabTruth truth) {
  std::vector<std::string> written;
  Lab lab(truth);
  const CancelReport report = run_cancel(lab, CancelOptions{});
  std::string curves = "tau_s,heating_envelope\n";
  HeatingEnvelopeCache env(1, truth.fock_cutoff);
  for (double tau : fine_grid(0.1, 1000)) curves += fmt(tau) + "," + fmt(env(tau, 15.0)) + "\n";
  write(dir, "fig4b_before.csv", trace_to_csv(report.before), written);
  write(dir, "fig4b_after.csv", trace_to_csv(report.after), written);
  write(dir, "fig4b_heating.csv", curves, written);
  write(dir, "fig4b_report.json", cancel_report_json(report).dump(2) + "\n", written);
  return written;
}

std::vector<std::string> figureS2(const std::filesystem::path& dir) {
  std::vector<std::string> written;
  const std::array<double, 3> amplitude{53.9, 53.9, 40.4};
  const auto heating = HeatingModel::make(6.0);
  json summary;
  for (int n = 0; n <= 2; ++n) {
    const auto curves = product_model_curves(n, ModulationParams::from_hz(amplitude[n], 60.0), heating,
                                             tau_grid(0.1, 50), 64, EvolutionOptions{Integrator::kExact});
    std::string csv = "tau_s,c_heat,c_0,c_tot,product\n";
    for (std::size_t i = 0; i < curves.tau.size(); ++i) {
      csv += fmt(curves.tau[i]) + "," + fmt(curves.c_heat[i]) + "," + fmt(curves.c_0[i]) + "," +
             fmt(curves.c_tot[i]) + "," + fmt(curves.product[i]) + "\n";
    }
    write(dir, "figS2_n" + std::to_string(n) + ".csv", csv, written);
    summary["n" + std::to_string(n)] = {{"A_over_2pi", amplitude[n]},
                                        {"nbar_dot", 6.0},
                                        {"max_abs_product_error", curves.max_abs_error}};
  }
  write(dir, "figS2_summary.json", summary.dump(2) + "\n", written);
  return written;
}

std::vector<std::string> figureS3a(const std::filesystem::path& dir, LabTruth truth) {
  std::vector<std::string> written;
  Lab lab(truth);
  CancelOptions co;
  const CancelReport report = run_cancel(lab, co);

  SimulateOptions sim;
  sim.n_pulses = 0;
  sim.tau_max = 0.02;
  sim.points = 40;
  const RamseyTrace before = simulate(lab, sim);
  if (report.compensation_applied) sim.compensation = report.solution.compensation;
  const RamseyTrace after = simulate(lab, sim);
  const FitResult gauss = fit_gaussian_envelope(after);

  HeatingEnvelopeCache env(0, truth.fock_cutoff);
  std::string curves = "tau_s,heating_envelope,gaussian_fit\n";
  for (double tau : fine_grid(sim.tau_max, 400)) {
    const double u = tau / gauss.params.at("T_g");
    curves += fmt(tau) + "," + fmt(env(tau, truth.mode(Mode::kX).nbar_dot)) + "," +
              fmt(gauss.params.at("c0") * std::exp(-u * u)) + "\n";
  }

  // Slow-drift monitor at the quarter-fringe point, both modes, 2 s bins.
  Lab monitor_lab(preset_scenario("default"));
  const double period = 0.05;
  const MonitorTrace mon = monitor_lab.monitor_trace({Mode::kX, Mode::kY}, 0.002, 250.0, period);
  const std::size_t bin = static_cast<std::size_t>(std::lround(2.0 / period));
  const auto bx = bin_outcomes(mon.outcomes.at(Mode::kX), bin);
  const auto by = bin_outcomes(mon.outcomes.at(Mode::kY), bin);
  std::string monitor = "t_s,p1_x,p1_y,shots_per_bin\n";
  for (std::size_t i = 0; i < bx.size(); ++i)
    monitor += fmt(2.0 * (i + 0.5)) + "," + fmt(bx[i]) + "," + fmt(by[i]) + "," + std::to_string(bin) + "\n";

  json j;
  j["gaussian_fit"] = fit_to_json(gauss);
  j["compensation_applied"] = report.compensation_applied;
  j["drift_sigma_f_hz"] = truth.drift.sigma_f_hz;
  j["expected_T_g_s"] = truth.drift.sigma_f_hz > 0.0 ? std::sqrt(2.0) / (kTwoPi * truth.drift.sigma_f_hz) : 0.0;
  write(dir, "figS3a_before.csv", trace_to_csv(before), written);
  write(dir, "figS3a_after.csv", trace_to_csv(after), written);
  write(dir, "figS3a_curves.csv", curves, written);
  write(dir, "figS3a_monitor.csv", monitor, written);
  write(dir, "figS3a_fit.json", j.dump(2) + "\n", written);
  return written;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"default", "fig2a", "fig2b", "fig2c", "fig3a", "figS3a", "gaussian"};
}

LabTruth preset_scenario(const std::string& name) {
  LabTruth t;
  t.drift = DriftModel{50.0, 30.0, true};
  const double r = t.transfer_r_mv_per_hz;
  if (name == "default") {
    t.rng_seed = 1;
  } else if (name == "fig2a" || name == "fig2b" || name == "fig2c") {
    const double amp = name == "fig2a" ? 53.9 : name == "fig2b" ? 40.4 : 45.5;
    t.modes[0].nbar_dot = name == "fig2a" ? 6.4 : name == "fig2b" ? 7.1 : 13.6;
    t.noise_phasor = noise_for_amplitude(amp, r, 102.0);
    t.rng_seed = name == "fig2a" ? 21 : name == "fig2b" ? 22 : 23;
  } else if (name == "fig3a") {
    t.noise_phasor = noise_for_amplitude(56.8, r, 102.0);
    t.modes[0].nbar_dot = 15.5;
    t.modes[1].nbar_dot = 15.5;
    // Modulation phase 0.913 pi at the 2 ms delay.
    t.trigger_phase = wrap_phase(0.913 * kPi - kTwoPi * 60.0 * 0.002);
    t.rng_seed = 31;
  } else if (name == "figS3a") {
    t.drift = DriftModel{50.0, 0.1, true};
    t.shot_period_s = 0.1;
    t.rng_seed = 43;
  } else if (name == "gaussian") {
    t.noise_phasor = Phasor::polar(0.0, 0.0);
    t.modes[0].nbar_dot = 0.0;
    t.modes[1].nbar_dot = 0.0;
    t.drift = DriftModel{50.0, 0.1, true};
    t.shot_period_s = 0.1;
    t.rng_seed = 10;
  } else {
    throw InputError("unknown scenario preset '" + name + "'");
  }
  return t;
}

std::vector<double> tau_grid(double tau_max, int points) {
  if (!(tau_max > 0.0) || points < 1) throw InputError("tau grid: need tau_max > 0 and points >= 1");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int j = 1; j <= points; ++j) g[j - 1] = tau_max * j / points;
  return g;
}

RamseyTrace simulate(Lab& lab, const SimulateOptions& o) {
  if (o.n_pulses < 0) throw InputError("simulate: pulse count must be >= 0");
  if (o.shots < 1) throw InputError("simulate: shots must be >= 1");
  ShotRequest req;
  req.mode = o.mode;
  req.seq = CPSequence::make(o.n_pulses, o.tau_max);
  req.t_d = o.t_d;
  req.analyzer_phase = o.analyzer_phase;
  req.shots = o.shots;
  req.compensation = o.compensation;
  return lab.run_trace(req, tau_grid(o.tau_max, o.points));
}

std::optional<double> model_coherence_time(const FitResult& fit, int n_pulses, double f_m_hz, double tau_max,
                                           int fock_cutoff) {
  const HeatingEnvelopeCache env(n_pulses, fock_cutoff);
  RamseyTrace curve;
  for (double tau : fine_grid(tau_max, 4000)) {
    curve.push_back({tau,
                     fitted_model(env, n_pulses, f_m_hz, fit.params.at("A_over_2pi"), fit.params.at("nbar_dot"), tau),
                     0, 0.0});
  }
  try {
    return coherence_time(curve);
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

std::vector<Phasor> auto_trial_set(int k, double magnitude_v) {
  if (k < 3) throw IllPosedError("cancel: need at least 3 trials");
  if (!(magnitude_v > 0.0)) throw InputError("cancel: trial magnitude must be > 0");
  std::vector<Phasor> out{Phasor::polar(0.0, 0.0)};
  for (int i = 0; i < k - 1; ++i) out.push_back(Phasor::polar(magnitude_v, kTwoPi * i / (k - 1)));
  return out;
}

CancelReport run_cancel(Lab& lab, const CancelOptions& o) {
  const std::vector<Phasor> injections = o.trials.empty() ? auto_trial_set(o.auto_trials, o.trial_magnitude_v) : o.trials;
  if (injections.size() < 3) throw IllPosedError("cancel: need at least 3 trials");
  const double f_m = lab.truth().f_line_hz;
  FitOptions fo;
  fo.envelope = std::make_shared<HeatingEnvelopeCache>(1, lab.truth().fock_cutoff);

  CancelReport rep;
  std::vector<TrialRecord> records;
  for (const Phasor& p : injections) {
    SimulateOptions sim;
    sim.mode = o.mode;
    sim.shots = o.trial_shots;
    sim.points = o.trial_points;
    sim.tau_max = o.tau_max;
    if (p.magnitude() > 0.0) sim.compensation = p;
    TrialOutcome t;
    t.fit = fit_amplitude(simulate(lab, sim), 1, f_m, fo);
    t.record = TrialRecord{p, t.fit.params.at("A_over_2pi"), t.fit.sigmas.at("A_over_2pi")};
    records.push_back(t.record);
    rep.trials.push_back(t);
  }
  rep.solution = solve_phasor(records);
  rep.compensation_applied = rep.solution.compensation.magnitude() > 2.0 * rep.solution.magnitude_sigma_v;

  SimulateOptions verify;
  verify.mode = o.mode;
  verify.shots = o.verify_shots;
  verify.points = o.verify_points;
  verify.tau_max = o.tau_max;
  rep.before = simulate(lab, verify);
  if (rep.compensation_applied) verify.compensation = rep.solution.compensation;
  rep.after = simulate(lab, verify);
  rep.before_fit = fit_amplitude(rep.before, 1, f_m, fo);
  rep.after_fit = fit_amplitude(rep.after, 1, f_m, fo);
  rep.coherence_before = model_coherence_time(rep.before_fit, 1, f_m, o.tau_max, lab.truth().fock_cutoff);
  rep.coherence_after = model_coherence_time(rep.after_fit, 1, f_m, o.tau_max, lab.truth().fock_cutoff);
  return rep;
}

json cancel_report_json(const CancelReport& rep) {
  json j;
  j["solution"] = solution_to_json(rep.solution);
  j["compensation_applied"] = rep.compensation_applied;
  json trials = json::array();
  for (const auto& t : rep.trials) {
    trials.push_back({{"injected_magnitude_v", t.record.injected.magnitude()},
                      {"injected_angle_deg", t.record.injected.angle() / kDeg},
                      {"residual_amplitude_hz", t.record.residual_amplitude_hz},
                      {"residual_sigma_hz", t.record.residual_sigma_hz},
                      {"predicted_residual_hz", predict_residual(rep.solution, t.record.injected)},
                      {"fit_converged", t.fit.converged}});
  }
  j["trials"] = trials;
  j["before_fit"] = fit_to_json(rep.before_fit);
  j["after_fit"] = fit_to_json(rep.after_fit);
  j["coherence_time_before_s"] = rep.coherence_before ? json(*rep.coherence_before) : json(nullptr);
  j["coherence_time_after_s"] = rep.coherence_after ? json(*rep.coherence_after) : json(nullptr);
  return j;
}

std::vector<std::string> figure_ids() {
  return {"fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig4b", "figS2", "figS3a"};
}

std::vector<std::string> write_figure(const std::string& id, const std::filesystem::path& out_dir,
                                      std::optional<LabTruth> scenario, std::optional<std::uint64_t> seed) {
  auto truth_for = [&](const std::string& preset) {
    LabTruth t = scenario ? *scenario : preset_scenario(preset);
    if (seed) t.rng_seed = *seed;
    return t;
  };
  std::filesystem::create_directories(out_dir);
  if (id == "fig2a") return figure2(id, 1, out_dir, truth_for("fig2a"));
  if (id == "fig2b") return figure2(id, 2, out_dir, truth_for("fig2b"));
  if (id == "fig2c") return figure2(id, 3, out_dir, truth_for("fig2c"));
  if (id == "fig3a") return figure3a(out_dir, truth_for("fig3a"));
  if (id == "fig3b") return figure3b(out_dir, truth_for("fig3a"));
  if (id == "fig4b") return figure4b(out_dir, truth_for("default"));
  if (id == "figS2") return figureS2(out_dir);
  if (id == "figS3a") return figureS3a(out_dir, truth_for("figS3a"));
  throw InputError("unknown figure id '" + id + "'");
}

}  // namespace linecancel::cli
