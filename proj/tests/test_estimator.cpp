#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "linecancel/bessel.hpp"
#include "linecancel/envelope_cache.hpp"
#include "linecancel/errors.hpp"
#include "linecancel/estimator.hpp"
#include "linecancel/levenberg_marquardt.hpp"
#include "linecancel/phase_oracle.hpp"
#include "linecancel/signal_model.hpp"
#include "linecancel/simlab.hpp"

using namespace linecancel;

namespace {

const std::shared_ptr<const HeatingEnvelopeCache>& echo_cache() {
  static const auto cache = std::make_shared<const HeatingEnvelopeCache>(1);
  return cache;
}

FitOptions echo_options() {
  FitOptions o;
  o.envelope = echo_cache();
  return o;
}

std::vector<double> taus(double tau_max = 0.1, int points = 80) {
  std::vector<double> out;
  for (int j = 1; j <= points; ++j) out.push_back(tau_max * j / points);
  return out;
}

RamseyTrace amplitude_model_trace(int n, double a_hz, double nbar_dot, const HeatingEnvelopeCache& env,
                                  double sigma = 0.01) {
  RamseyTrace tr;
  const double omega = kTwoPi * 60.0;
  for (double tau : taus()) {
    const double c = env(tau, nbar_dot) * bessel_j0(kTwoPi * a_hz / omega * filter_F(n, omega * tau));
    tr.push_back({tau, c, 500, sigma});
  }
  return tr;
}

RamseyTrace phase_model_trace(double a_hz, double phi_d, double nbar_dot, double sigma = 0.01) {
  RamseyTrace tr;
  for (double tau : taus()) {
    const auto mod = ModulationParams::from_hz(a_hz, 60.0, phi_d);
    const double c = (*echo_cache())(tau, nbar_dot) * std::cos(accumulated_phase(CPSequence::make(1, tau), mod));
    tr.push_back({tau, c, 500, sigma});
  }
  return tr;
}

LabTruth fig2a_truth(std::uint64_t seed) {
  LabTruth t;
  t.rng_seed = seed;
  t.modes[0].nbar_dot = 6.4;
  t.noise_phasor = Phasor::polar(53.9 * 0.38e-3, 0.0);
  return t;
}

RamseyTrace echo_trace(Lab& lab, std::optional<double> t_d = std::nullopt) {
  ShotRequest rq;
  rq.seq = CPSequence::make(1, 0.01);
  rq.shots = 500;
  rq.t_d = t_d;
  return lab.run_trace(rq, taus());
}

bool within(const FitResult& f, const std::string& key, double truth, double k) {
  return std::abs(f.params.at(key) - truth) <= k * f.sigmas.at(key);
}

}  // namespace

TEST_CASE("shot noise sigma") {
  CHECK(shot_noise_sigma(0.0, 100) == doctest::Approx(0.1));
  CHECK(shot_noise_sigma(0.6, 100) == doctest::Approx(0.08));
  CHECK(shot_noise_sigma(1.0, 100) == doctest::Approx(0.005));
  CHECK(shot_noise_sigma(-1.0, 500) == doctest::Approx(0.001));
}

TEST_CASE("levenberg-marquardt on an exponential") {
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(30, 0.0, 3.0);
  Eigen::VectorXd y = (2.5 * (-1.3 * x.array()).exp()).matrix();
  auto res = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    return (p[0] * (-p[1] * x.array()).exp()).matrix() - y;
  };
  Eigen::VectorXd lo(2), hi(2), start(2);
  lo << 0, 0;
  hi << 10, 10;
  start << 1, 0.2;
  const auto r = levenberg_marquardt(res, start, lo, hi, {});
  CHECK(r.converged);
  CHECK(r.params[0] == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(r.params[1] == doctest::Approx(1.3).epsilon(1e-9));
  CHECK(r.chi2 < 1e-20);

  // Bound-active optimum.
  hi << 10, 1.0;
  const auto b = levenberg_marquardt(res, start, lo, hi, {});
  CHECK(b.params[1] == doctest::Approx(1.0));
}

TEST_CASE("fit_amplitude recovers noiseless model traces") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ua(5.0, 100.0), un(0.0, 30.0);
  const auto opts = echo_options();
  int failures = 0;
  for (int k = 0; k < 200; ++k) {
    const double a = ua(rng), nd = un(rng);
    const auto f = fit_amplitude(amplitude_model_trace(1, a, nd, *echo_cache()), 1, 60.0, opts);
    const bool ok = std::abs(f.params.at("A_over_2pi") - a) <= 1e-6 * a &&
                    std::abs(f.params.at("nbar_dot") - nd) <= 1e-6 * std::max(nd, 1.0) && f.chi2 < 1e-12;
    if (!ok) {
      ++failures;
      MESSAGE("draw " << k << ": A " << a << " -> " << f.params.at("A_over_2pi") << ", ndot " << nd << " -> "
                      << f.params.at("nbar_dot"));
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("fit_amplitude on other pulse counts") {
  FitOptions o;
  o.envelope = std::make_shared<const HeatingEnvelopeCache>(2);
  const auto f = fit_amplitude(amplitude_model_trace(2, 40.4, 7.1, *o.envelope), 2, 60.0, o);
  CHECK(f.params.at("A_over_2pi") == doctest::Approx(40.4).epsilon(1e-6));
  CHECK(f.params.at("nbar_dot") == doctest::Approx(7.1).epsilon(1e-6));
  // A cache built for a different pulse count is rejected.
  CHECK_THROWS_AS(fit_amplitude(amplitude_model_trace(2, 40.4, 7.1, *o.envelope), 1, 60.0, o), InputError);
}

TEST_CASE("fit_amplitude on a simulated fig2a-preset trace") {
  Lab lab(fig2a_truth(3));
  const auto f = fit_amplitude(echo_trace(lab), 1, 60.0, echo_options());
  CHECK(f.converged);
  CHECK(within(f, "A_over_2pi", 53.9, 3.0));
  CHECK(within(f, "nbar_dot", 6.4, 3.0));
  CHECK(f.sigmas.at("A_over_2pi") > 0.0);
  CHECK(f.chi2_reduced > 0.5);
  CHECK(f.chi2_reduced < 2.0);
  CHECK(f.dof == 78);
}

TEST_CASE("fit_amplitude null case") {
  int consistent = 0;
  for (int s = 0; s < 100; ++s) {
    auto truth = fig2a_truth(5000 + s);
    truth.noise_phasor = Phasor::polar(0.0, 0.0);
    Lab lab(truth);
    const auto f = fit_amplitude(echo_trace(lab), 1, 60.0, echo_options());
    if (f.params.at("A_over_2pi") <= 2.0 * f.sigmas.at("A_over_2pi")) ++consistent;
  }
  MESSAGE("null fits within 2 sigma of zero: " << consistent << "/100");
  CHECK(consistent >= 85);
}

TEST_CASE("fit_amplitude is invariant under a common sigma rescale") {
  Lab lab(fig2a_truth(8));
  const auto tr = echo_trace(lab);
  RamseyTrace scaled;
  for (auto p : tr.points()) {
    p.sigma *= 3.0;
    scaled.push_back(p);
  }
  const auto f1 = fit_amplitude(tr, 1, 60.0, echo_options());
  const auto f3 = fit_amplitude(scaled, 1, 60.0, echo_options());
  CHECK(f3.params.at("A_over_2pi") == doctest::Approx(f1.params.at("A_over_2pi")).epsilon(1e-6));
  CHECK(f3.sigmas.at("A_over_2pi") == doctest::Approx(3.0 * f1.sigmas.at("A_over_2pi")).epsilon(1e-4));
  CHECK(f3.chi2 == doctest::Approx(f1.chi2 / 9.0).epsilon(1e-6));
}

TEST_CASE("fit_amplitude input errors") {
  const auto good = amplitude_model_trace(1, 30.0, 5.0, *echo_cache());
  RamseyTrace short_trace(std::vector<TracePoint>(good.points().begin(), good.points().begin() + 7));
  CHECK_THROWS_AS(fit_amplitude(short_trace, 1, 60.0, echo_options()), InputError);

  RamseyTrace blind;
  for (auto p : good.points()) {
    p.sigma = std::numeric_limits<double>::infinity();
    blind.push_back(p);
  }
  CHECK_THROWS_AS(fit_amplitude(blind, 1, 60.0, echo_options()), InputError);

  // Infinite sigma drops the point.
  RamseyTrace spoiled;
  for (std::size_t i = 0; i < good.size(); ++i) {
    auto p = good[i];
    if (i % 10 == 3) {
      p.signal = -0.9;
      p.sigma = std::numeric_limits<double>::infinity();
    }
    spoiled.push_back(p);
  }
  const auto f = fit_amplitude(spoiled, 1, 60.0, echo_options());
  CHECK(f.params.at("A_over_2pi") == doctest::Approx(30.0).epsilon(1e-6));
  CHECK(f.dof == 80 - 8 - 2);
  CHECK_THROWS(fit_amplitude(good, 1, -60.0, echo_options()));
}

TEST_CASE("fit_phase recovers noiseless model traces") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> ua(5.0, 100.0), un(0.0, 30.0), up(0.0, kTwoPi);
  const auto opts = echo_options();
  int failures = 0;
  for (int k = 0; k < 40; ++k) {
    const double a = ua(rng), nd = un(rng), phi = up(rng);
    const auto f = fit_phase(phase_model_trace(a, phi, nd), 60.0, opts);
    const double dphi = std::remainder(f.params.at("phi_d") - phi, M_PI);
    const bool ok = std::abs(f.params.at("A_over_2pi") - a) <= 1e-6 * a && std::abs(dphi) <= 1e-6 &&
                    std::abs(f.params.at("nbar_dot") - nd) <= 1e-6 * std::max(nd, 1.0);
    if (!ok) ++failures;
    CHECK(f.params.at("phi_d") >= 0.0);
    CHECK(f.params.at("phi_d") < M_PI);
  }
  CHECK(failures == 0);
}

TEST_CASE("fit_phase periodicity") {
  const auto a = fit_phase(phase_model_trace(56.8, 0.913 * M_PI, 15.5), 60.0, echo_options());
  const auto b = fit_phase(phase_model_trace(56.8, 0.913 * M_PI + kTwoPi, 15.5), 60.0, echo_options());
  CHECK(a.params.at("phi_d") == doctest::Approx(b.params.at("phi_d")).epsilon(1e-9));
  CHECK(a.phase_period == doctest::Approx(M_PI));

  // With a nonzero analyzer phase the full period is identifiable.
  auto opts = echo_options();
  opts.analyzer_phase = M_PI / 2;
  RamseyTrace tr;
  for (double tau : taus()) {
    const auto mod = ModulationParams::from_hz(40.0, 60.0, 1.1 * M_PI);
    tr.push_back({tau, (*echo_cache())(tau, 5.0) * std::sin(accumulated_phase(CPSequence::make(1, tau), mod)), 500,
                  0.01});
  }
  const auto f = fit_phase(tr, 60.0, opts);
  CHECK(f.phase_period == doctest::Approx(kTwoPi));
  CHECK(f.params.at("phi_d") == doctest::Approx(1.1 * M_PI).epsilon(1e-6));
}

TEST_CASE("fit_phase on a simulated fig3a-preset trace") {
  auto t = fig2a_truth(4);
  t.modes[0].nbar_dot = 15.5;
  t.noise_phasor = Phasor::polar(56.8 * 0.38e-3, 0.0);
  t.trigger_phase = 0.913 * M_PI - kTwoPi * 60.0 * 0.002;
  Lab lab(t);
  const auto f = fit_phase(echo_trace(lab, 0.002), 60.0, echo_options());
  CHECK(within(f, "A_over_2pi", 56.8, 3.0));
  CHECK(within(f, "nbar_dot", 15.5, 3.0));
  CHECK(std::abs(std::remainder(f.params.at("phi_d") - 0.913 * M_PI, M_PI)) <= 3.0 * f.sigmas.at("phi_d"));
}

TEST_CASE("phase slope") {
  std::vector<DelayPhase> line;
  for (int k = 0; k <= 8; ++k) {
    const double t_d = 0.002 * k;
    line.push_back({t_d, wrap_phase(0.4 + kTwoPi * 60.0 * t_d), 0.01});
  }
  const auto s = fit_phase_slope(line);
  CHECK(s.slope == doctest::Approx(kTwoPi * 60.0).epsilon(1e-10));
  CHECK(s.intercept == doctest::Approx(0.4).epsilon(1e-10));
  CHECK_FALSE(s.ambiguous);

  // Order does not matter.
  std::reverse(line.begin(), line.end());
  CHECK(fit_phase_slope(line).slope == doctest::Approx(kTwoPi * 60.0).epsilon(1e-10));

  const auto two = fit_phase_slope({{0.0, 0.3, 0.01}, {0.001, 0.3 + 1.2, 0.01}});
  CHECK(two.slope == doctest::Approx(1200.0).epsilon(1e-12));

  // Gaps near half a period cannot be assigned.
  const auto amb = fit_phase_slope({{0.0, 0.0, 0.2}, {0.001, 3.0, 0.2}, {0.002, 6.0, 0.2}});
  CHECK(amb.ambiguous);

  CHECK_THROWS_AS(fit_phase_slope({{0.0, 0.1, 0.01}}), InputError);
  CHECK_THROWS_AS(fit_phase_slope({{0.001, 0.1, 0.01}, {0.001, 0.2, 0.01}}), IllPosedError);
}

TEST_CASE("phase slope with noise and a pi period") {
  std::mt19937_64 rng(66);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<DelayPhase> d;
  const double slope = kTwoPi * 66.7;
  for (int k = 0; k <= 8; ++k) {
    const double t_d = 0.002 * k;
    d.push_back({t_d, std::fmod(std::fmod(1.0 + slope * t_d + noise(rng), M_PI) + M_PI, M_PI), 0.02});
  }
  const auto s = fit_phase_slope(d, M_PI);
  CHECK(std::abs(s.slope - slope) <= 3.0 * s.sigma);
  CHECK(s.sigma > 0.0);
  CHECK_FALSE(s.ambiguous);
}

TEST_CASE("gaussian envelope") {
  RamseyTrace exact;
  for (int j = 1; j <= 40; ++j) {
    const double tau = 0.0005 * j;
    exact.push_back({tau, 0.97 * std::exp(-std::pow(tau / 0.005, 2)), 1000, 0.01});
  }
  const auto f = fit_gaussian_envelope(exact);
  CHECK(f.params.at("T_g") == doctest::Approx(0.005).epsilon(1e-9));
  CHECK(f.params.at("c0") == doctest::Approx(0.97).epsilon(1e-9));

  // Quasi-static drift of 50 Hz standard deviation: T_g = sqrt(2) / sigma.
  LabTruth t;
  t.noise_phasor = Phasor::polar(0.0, 0.0);
  t.modes[0].nbar_dot = 0.0;
  t.drift = DriftModel{50.0, 0.1, true};
  t.shot_period_s = 0.1;
  t.rng_seed = 12;
  Lab lab(t);
  ShotRequest rq;
  rq.seq = CPSequence::make(0, 0.001);
  rq.shots = 1500;
  const auto tr = lab.run_trace(rq, taus(0.015, 30));
  const auto g = fit_gaussian_envelope(tr);
  const double expected = std::sqrt(2.0) / (kTwoPi * 50.0);
  CHECK(std::abs(g.params.at("T_g") - expected) <= 0.05 * expected);
  CHECK(std::isfinite(g.sigmas.at("T_g")));
  CHECK(g.sigmas.at("T_g") > 0.0);
}

TEST_CASE("coverage of one-sigma intervals at fig2a-preset truth") {
  int inside = 0;
  const int reps = 200;
  for (int s = 0; s < reps; ++s) {
    Lab lab(fig2a_truth(1000 + s));
    if (within(fit_amplitude(echo_trace(lab), 1, 60.0, echo_options()), "A_over_2pi", 53.9, 1.0)) ++inside;
  }
  const double coverage = static_cast<double>(inside) / reps;
  MESSAGE("A coverage " << coverage);
  CHECK(coverage >= 0.60);
  CHECK(coverage <= 0.75);
}
