#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "linecancel/estimator.hpp"
#include "linecancel/phasor_cancel.hpp"
#include "linecancel/simlab.hpp"

namespace linecancel::cli {

/// Built-in scenarios, identical to the files under scenarios/.
/// Names: default, fig2a, fig2b, fig2c, fig3a, gaussian. InputError otherwise.
LabTruth preset_scenario(const std::string& name);
std::vector<std::string> preset_names();

struct SimulateOptions {
  Mode mode = Mode::kX;
  int n_pulses = 1;
  double tau_max = 0.1;
  int points = 80;
  long shots = 500;
  std::optional<double> t_d;
  double analyzer_phase = 0.0;
  std::optional<Phasor> compensation;
};

/// tau_max * j / points for j = 1..points.
std::vector<double> tau_grid(double tau_max, int points);

RamseyTrace simulate(Lab& lab, const SimulateOptions& options);

/// Fitted C_heat * C_n evaluated on a fine grid; the first 1/e crossing, or
/// none when the curve stays above threshold.
std::optional<double> model_coherence_time(const FitResult& fit, int n_pulses, double f_m_hz,
                                           double tau_max, int fock_cutoff = kDefaultFockCutoff);

struct TrialOutcome {
  TrialRecord record;
  FitResult fit;
};

struct CancelOptions {
  Mode mode = Mode::kX;
  int auto_trials = 4;
  double trial_magnitude_v = 0.02;
  /// Explicit injections; overrides auto_trials when non-empty.
  std::vector<Phasor> trials;
  long trial_shots = 500;
  int trial_points = 80;
  long verify_shots = 150;
  int verify_points = 80;
  double tau_max = 0.1;
};

struct CancelReport {
  std::vector<TrialOutcome> trials;
  CancelSolution solution;
  bool compensation_applied = false;
  RamseyTrace before;
  RamseyTrace after;
  FitResult before_fit;
  FitResult after_fit;
  std::optional<double> coherence_before;
  std::optional<double> coherence_after;
};

/// Zero injection plus k - 1 injections of equal magnitude spread evenly in angle.
std::vector<Phasor> auto_trial_set(int k, double magnitude_v);

/// Measures each trial's residual amplitude with free-running echo traces,
/// solves for the noise phasor, injects the compensation and records echo
/// traces before and after. Compensation is skipped when the recovered V is
/// within 2 sigma of zero.
CancelReport run_cancel(Lab& lab, const CancelOptions& options);
nlohmann::json cancel_report_json(const CancelReport& report);

/// Figure ids: fig2a fig2b fig2c fig3a fig3b fig4b figS2 figS3a.
std::vector<std::string> figure_ids();

/// Writes the CSV/JSON bundle for one figure into `out_dir` and returns the
/// file names. `scenario` replaces the figure's built-in scenario.
std::vector<std::string> write_figure(const std::string& id, const std::filesystem::path& out_dir,
                                      std::optional<LabTruth> scenario,
                                      std::optional<std::uint64_t> seed);

}  // namespace linecancel::cli
