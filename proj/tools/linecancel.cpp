// linecancel: simulate, fit, cancel and reproduce figures.
//
// Exit codes: 0 success (including unconverged fits), 2 input error,
// 3 numeric failure, 4 ill-posed trial geometry.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "linecancel/errors.hpp"
#include "linecancel/estimator.hpp"
#include "linecancel/io.hpp"
#include "workflow.hpp"

namespace lc = linecancel;
namespace fs = std::filesystem;

namespace {

constexpr double kDeg = lc::kTwoPi / 360.0;

enum ExitCode { kOk = 0, kInput = 2, kNumeric = 3, kIllPosed = 4 };

lc::Mode parse_mode(const std::string& s) {
  if (s == "X" || s == "x") return lc::Mode::kX;
  if (s == "Y" || s == "y") return lc::Mode::kY;
  throw lc::InputError("mode must be X or Y");
}

lc::LabTruth load_truth(const std::string& scenario, std::optional<std::uint64_t> seed) {
  // A missing "fig2a.json" falls back to the built-in preset of that name.
  lc::LabTruth t = fs::exists(scenario) ? lc::load_scenario(scenario)
                                        : lc::cli::preset_scenario(fs::path(scenario).stem().string());
  if (seed) t.rng_seed = *seed;
  return t;
}

std::vector<lc::Phasor> load_trials(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(lc::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw lc::InputError("trials file: " + std::string(e.what()));
  }
  if (!j.contains("trials") || !j["trials"].is_array()) throw lc::InputError("trials file: missing 'trials' array");
  std::vector<lc::Phasor> out;
  for (const auto& t : j["trials"]) {
    if (!t.contains("magnitude_mv") || !t.contains("angle_deg") || !t["magnitude_mv"].is_number() ||
        !t["angle_deg"].is_number())
      throw lc::InputError("trials file: each trial needs numeric magnitude_mv and angle_deg");
    out.push_back(lc::Phasor::polar(t["magnitude_mv"].get<double>() * 1e-3, t["angle_deg"].get<double>() * kDeg));
  }
  return out;
}

void emit(const fs::path& dir, const std::string& name, const std::string& content) {
  fs::create_directories(dir);
  lc::write_file_atomic(dir / name, content);
  std::cerr << "wrote " << (dir / name).string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Line-synchronous secular-frequency modulation: simulate, fit, cancel"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--seed", seed, "Override the scenario seed");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a Ramsey trace from a scenario");
  std::string scenario = "default";
  std::string mode = "X";
  std::string output_name = "trace.csv";
  lc::cli::SimulateOptions so;
  std::optional<double> t_d;
  std::optional<double> comp_mv;
  double comp_deg = 0.0;
  sim->add_option("--scenario", scenario, "Scenario JSON file or preset name")->capture_default_str();
  sim->add_option("--mode", mode, "Mode X or Y")->capture_default_str();
  sim->add_option("--n", so.n_pulses, "Refocusing pulses")->capture_default_str();
  sim->add_option("--tau-max", so.tau_max, "Longest wait time (s)")->capture_default_str();
  sim->add_option("--points", so.points, "Number of wait times")->capture_default_str();
  sim->add_option("--shots", so.shots, "Shots per point")->capture_default_str();
  sim->add_option("--t-d", t_d, "Line-trigger delay (s); free running if absent");
  sim->add_option("--analyzer", so.analyzer_phase, "Analyzer phase (rad)")->capture_default_str();
  sim->add_option("--compensation-mv", comp_mv, "Injected compensation magnitude (mV)");
  sim->add_option("--compensation-deg", comp_deg, "Injected compensation angle (deg)");
  sim->add_option("--name", output_name, "Output file name")->capture_default_str();

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a trace or delay sweep");
  std::string fit_mode;
  std::string input;
  int fit_n = 1;
  double f_m = 60.0;
  double analyzer = 0.0;
  std::string period = "2pi";
  std::string fit_name = "fit.json";
  fit->add_option("kind", fit_mode, "amplitude | phase | slope | envelope")
      ->required()
      ->check(CLI::IsMember({"amplitude", "phase", "slope", "envelope"}));
  fit->add_option("--input", input, "Trace CSV, or t_d_s,phi_d,sigma CSV for slope")->required();
  fit->add_option("--n", fit_n, "Refocusing pulses (amplitude)")->capture_default_str();
  fit->add_option("--f-m", f_m, "Modulation frequency (Hz)")->capture_default_str();
  fit->add_option("--analyzer", analyzer, "Analyzer phase of the trace (rad)")->capture_default_str();
  fit->add_option("--period", period, "Phase period for slope unwrapping: 2pi or pi")
      ->check(CLI::IsMember({"2pi", "pi"}))
      ->capture_default_str();
  fit->add_option("--name", fit_name, "Output file name")->capture_default_str();

  // cancel
  auto* cancel = app.add_subcommand("cancel", "Locate the noise phasor and apply compensation");
  std::string cancel_scenario = "default";
  std::string cancel_mode = "X";
  std::string trials_file;
  lc::cli::CancelOptions co;
  double trial_mv = co.trial_magnitude_v * 1e3;
  cancel->add_option("--scenario", cancel_scenario, "Scenario JSON file or preset name")->capture_default_str();
  cancel->add_option("--mode", cancel_mode, "Mode X or Y")->capture_default_str();
  cancel->add_option("--auto-trials", co.auto_trials, "Number of automatic trials (>= 3)")->capture_default_str();
  cancel->add_option("--trial-magnitude-mv", trial_mv, "Automatic trial magnitude (mV)")->capture_default_str();
  cancel->add_option("--trials", trials_file, "JSON file {\"trials\": [{magnitude_mv, angle_deg}, ...]}");
  cancel->add_option("--shots", co.trial_shots, "Shots per point for trials")->capture_default_str();
  cancel->add_option("--verify-shots", co.verify_shots, "Shots per point before/after")->capture_default_str();

  // figures
  auto* figs = app.add_subcommand("figures", "Write the data bundle for one figure");
  std::string figure_id;
  std::string fig_scenario;
  figs->add_option("id", figure_id, "fig2a fig2b fig2c fig3a fig3b fig4b figS2 figS3a")->required();
  figs->add_option("--scenario", fig_scenario, "Replace the figure's built-in scenario");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    const fs::path dir(out_dir);
    if (*sim) {
      so.mode = parse_mode(mode);
      so.t_d = t_d;
      if (comp_mv) so.compensation = lc::Phasor::polar(*comp_mv * 1e-3, comp_deg * kDeg);
      lc::Lab lab(load_truth(scenario, seed));
      emit(dir, output_name, lc::trace_to_csv(lc::cli::simulate(lab, so)));
    } else if (*fit) {
      nlohmann::json j;
      if (fit_mode == "slope") {
        const auto delays = lc::delays_from_csv(lc::read_file(input));
        const auto s = lc::fit_phase_slope(delays, period == "pi" ? lc::kTwoPi / 2.0 : lc::kTwoPi);
        j = {{"slope_rad_per_s", s.slope}, {"slope_sigma", s.sigma},     {"intercept", s.intercept},
             {"intercept_sigma", s.intercept_sigma}, {"chi2_reduced", s.chi2_reduced}, {"ambiguous", s.ambiguous},
             {"unwrapped_phi_d", s.unwrapped}};
      } else {
        const lc::RamseyTrace trace = lc::load_trace(input);
        lc::FitResult r;
        if (fit_mode == "amplitude") {
          r = lc::fit_amplitude(trace, fit_n, f_m);
        } else if (fit_mode == "phase") {
          lc::FitOptions fo;
          fo.analyzer_phase = analyzer;
          r = lc::fit_phase(trace, f_m, fo);
        } else {
          r = lc::fit_gaussian_envelope(trace);
        }
        j = lc::fit_to_json(r);
      }
      j["kind"] = fit_mode;
      std::cout << j.dump(2) << "\n";
      emit(dir, fit_name, j.dump(2) + "\n");
    } else if (*cancel) {
      co.mode = parse_mode(cancel_mode);
      co.trial_magnitude_v = trial_mv * 1e-3;
      if (!trials_file.empty()) co.trials = load_trials(trials_file);
      lc::Lab lab(load_truth(cancel_scenario, seed));
      const auto report = lc::cli::run_cancel(lab, co);
      const auto j = lc::cli::cancel_report_json(report);
      std::cout << j.dump(2) << "\n";
      emit(dir, "cancel.json", j.dump(2) + "\n");
      emit(dir, "before.csv", lc::trace_to_csv(report.before));
      emit(dir, "after.csv", lc::trace_to_csv(report.after));
    } else if (*figs) {
      std::optional<lc::LabTruth> truth;
      if (!fig_scenario.empty()) truth = load_truth(fig_scenario, std::nullopt);
      for (const auto& name : lc::cli::write_figure(figure_id, dir, truth, seed))
        std::cerr << "wrote " << (dir / name).string() << "\n";
    }
  } catch (const lc::IllPosedError& e) {
    std::cerr << "ill-posed: " << e.what() << "\n";
    return kIllPosed;
  } catch (const lc::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const lc::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const lc::DomainError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  }
  return kOk;
}
