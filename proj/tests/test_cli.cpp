#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "linecancel/envelope_cache.hpp"
#include "linecancel/io.hpp"
#include "linecancel/phase_oracle.hpp"
#include "linecancel/signal_model.hpp"
#include "workflow.hpp"

using namespace linecancel;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("linecancel_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args, const fs::path& dir) {
  const std::string cmd = std::string("\"") + LINECANCEL_CLI_PATH + "\" --out \"" + dir.string() + "\" " + args +
                          " > \"" + (dir / "stdout.txt").string() + "\" 2> \"" + (dir / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

void write(const fs::path& path, const std::string& text) { std::ofstream(path) << text; }

json read_json(const fs::path& path) { return json::parse(read_file(path)); }

std::string quiet_scenario(const fs::path& dir) {
  auto t = cli::preset_scenario("default");
  t.noise_phasor = Phasor::polar(0.0, 0.0);
  t.drift.sigma_f_hz = 0.0;
  const auto path = dir / "quiet.json";
  write(path, scenario_to_json(t).dump(2));
  return path.string();
}

}  // namespace

TEST_CASE("cli: help and usage errors") {
  const auto dir = fresh_dir("usage");
  CHECK(run("--help", dir) == 0);
  CHECK(run("", dir) == 2);
  CHECK(run("frobnicate", dir) == 2);
  CHECK(run("simulate --points notanumber", dir) == 2);
  CHECK(run("simulate --scenario no_such_preset", dir) == 2);
  CHECK(run("simulate --mode Z", dir) == 2);
}

TEST_CASE("cli: simulate writes an 80-row trace deterministically") {
  const auto a = fresh_dir("sim_a");
  const auto b = fresh_dir("sim_b");
  const std::string args = "simulate --scenario fig2a.json --n 1 --tau-max 0.1 --points 80 --shots 500";
  REQUIRE(run(args, a) == 0);
  REQUIRE(run(args, b) == 0);
  const auto text = read_file(a / "trace.csv");
  CHECK(trace_from_csv(text).size() == 80);
  CHECK(text == read_file(b / "trace.csv"));

  // The seed override may follow the subcommand.
  REQUIRE(run(args + " --seed 99", b) == 0);
  CHECK(text != read_file(b / "trace.csv"));

  // Shipped scenario file and built-in preset agree.
  REQUIRE(run("simulate --scenario \"" LINECANCEL_SOURCE_DIR "/scenarios/fig2a.json\" --points 80 --shots 500", b) ==
          0);
  CHECK(text == read_file(b / "trace.csv"));
}

TEST_CASE("cli: zero-noise scenario follows the heating envelope") {
  const auto dir = fresh_dir("quiet");
  REQUIRE(run("simulate --scenario \"" + quiet_scenario(dir) + "\" --points 40", dir) == 0);
  const auto tr = load_trace(dir / "trace.csv");
  const HeatingEnvelopeCache env(1);
  for (const auto& p : tr.points()) CHECK(std::abs(p.signal - env(p.tau, 15.0)) <= 3.0 * p.sigma + 1e-12);
}

TEST_CASE("cli: fit") {
  const auto dir = fresh_dir("fit");
  REQUIRE(run("simulate --scenario fig2a --name fig2a.csv", dir) == 0);
  REQUIRE(run("fit amplitude --input \"" + (dir / "fig2a.csv").string() + "\"", dir) == 0);
  const auto j = read_json(dir / "fit.json");
  CHECK(j.at("converged") == true);
  CHECK(std::abs(j["params"]["A_over_2pi"].get<double>() - 53.9) <= 3.0 * j["sigmas"]["A_over_2pi"].get<double>());
  CHECK(json::parse(read_file(dir / "stdout.txt")) == j);

  // Parse-emit-parse keeps the fit stable.
  write(dir / "rewritten.csv", trace_to_csv(load_trace(dir / "fig2a.csv")));
  REQUIRE(run("fit amplitude --input \"" + (dir / "rewritten.csv").string() + "\" --name refit.json", dir) == 0);
  CHECK(read_json(dir / "refit.json").at("params") == j.at("params"));

  // Self-generated noiseless trace.
  const HeatingEnvelopeCache env(1);
  RamseyTrace model;
  for (double tau : cli::tau_grid(0.1, 60)) {
    const auto seq = CPSequence::make(1, tau);
    model.push_back({tau, env(tau, 9.0) * analytic_signal(seq, ModulationParams::from_hz(33.0, 60.0)), 500, 0.01});
  }
  write(dir / "model.csv", trace_to_csv(model));
  REQUIRE(run("fit amplitude --input \"" + (dir / "model.csv").string() + "\" --name model.json", dir) == 0);
  CHECK(read_json(dir / "model.json").at("chi2_reduced").get<double>() < 1e-6);

  // Phase mode at a 2 ms delay.
  REQUIRE(run("simulate --scenario fig3a --t-d 0.002 --name fig3a.csv", dir) == 0);
  REQUIRE(run("fit phase --input \"" + (dir / "fig3a.csv").string() + "\" --name phase.json", dir) == 0);
  const auto p = read_json(dir / "phase.json");
  const double dphi = std::remainder(p["params"]["phi_d"].get<double>() - 0.913 * M_PI, M_PI);
  CHECK(std::abs(dphi) <= 3.0 * p["sigmas"]["phi_d"].get<double>());

  // Delay sweep slope.
  std::string delays = "t_d_s,phi_d,sigma\n";
  for (int k = 0; k <= 8; ++k) {
    const double t_d = 0.002 * k;
    delays += std::to_string(t_d) + "," + std::to_string(std::fmod(0.3 + kTwoPi * 60.0 * t_d, M_PI)) + ",0.01\n";
  }
  write(dir / "delays.csv", delays);
  REQUIRE(run("fit slope --period pi --input \"" + (dir / "delays.csv").string() + "\" --name slope.json", dir) == 0);
  CHECK(read_json(dir / "slope.json").at("slope_rad_per_s").get<double>() == doctest::Approx(kTwoPi * 60.0).epsilon(1e-5));
}

TEST_CASE("cli: input errors") {
  const auto dir = fresh_dir("errors");
  write(dir / "bad_schema.json", R"({"schema": "something/9", "seed": 1})");
  CHECK(run("simulate --scenario \"" + (dir / "bad_schema.json").string() + "\"", dir) == 2);
  write(dir / "not_json.json", "{ nope");
  CHECK(run("simulate --scenario \"" + (dir / "not_json.json").string() + "\"", dir) == 2);
  write(dir / "bad.csv", "tau_s,signal,shots,sigma\n0.01,zero,500,0.1\n");
  CHECK(run("fit amplitude --input \"" + (dir / "bad.csv").string() + "\"", dir) == 2);
  CHECK(run("fit amplitude --input \"" + (dir / "absent.csv").string() + "\"", dir) == 2);
  CHECK(run("fit sideways --input \"" + (dir / "bad.csv").string() + "\"", dir) == 2);
  CHECK(run("figures fig9z", dir) == 2);
}

TEST_CASE("cli: collinear trials are ill-posed") {
  const auto dir = fresh_dir("collinear");
  write(dir / "trials.json",
        R"({"trials": [{"magnitude_mv": 0, "angle_deg": 0}, {"magnitude_mv": 10, "angle_deg": 30},
                       {"magnitude_mv": 20, "angle_deg": 30}, {"magnitude_mv": 10, "angle_deg": 210}]})");
  CHECK(run("cancel --trials \"" + (dir / "trials.json").string() + "\" --shots 100", dir) == 4);
  CHECK(run("cancel --auto-trials 2", dir) == 4);
}

TEST_CASE("cli: cancel on a zero-noise scenario skips compensation") {
  const auto dir = fresh_dir("cancel_quiet");
  REQUIRE(run("cancel --scenario \"" + quiet_scenario(dir) + "\" --verify-shots 50", dir) == 0);
  const auto j = read_json(dir / "cancel.json");
  CHECK(j.at("compensation_applied") == false);
  CHECK(j["solution"]["noise_phasor"]["magnitude_v"].get<double>() < 0.003);
  CHECK(fs::exists(dir / "before.csv"));
  CHECK(fs::exists(dir / "after.csv"));
}

TEST_CASE("cli: figures") {
  const auto dir = fresh_dir("figures");
  REQUIRE(run("figures fig2a", dir) == 0);
  CHECK(fs::exists(dir / "fig2a_data.csv"));
  const auto fit = read_json(dir / "fig2a_fit.json");
  CHECK(fit.contains("params"));
  REQUIRE(run("figures figS2", dir) == 0);
  bool any = false;
  for (const auto& e : fs::directory_iterator(dir)) any = any || e.path().filename().string().rfind("figS2", 0) == 0;
  CHECK(any);
}
