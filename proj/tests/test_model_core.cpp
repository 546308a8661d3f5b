#include <doctest.h>

#include <cmath>
#include <random>

#include "linecancel/bessel.hpp"
#include "linecancel/errors.hpp"
#include "linecancel/phase_oracle.hpp"
#include "linecancel/signal_model.hpp"
#include "oracles.hpp"

using namespace linecancel;

TEST_CASE("modulation parameters validate and normalize") {
  const auto m = ModulationParams::make(10.0, 20.0, -0.5);
  CHECK(m.phase == doctest::Approx(kTwoPi - 0.5));
  CHECK_THROWS_AS(ModulationParams::make(-1.0, 20.0), DomainError);
  CHECK_THROWS_AS(ModulationParams::make(1.0, 0.0), DomainError);
  CHECK(ModulationParams::from_hz(50.0, 60.0).amplitude_hz() == doctest::Approx(50.0));
  CHECK(wrap_phase(kTwoPi) == 0.0);
  CHECK(wrap_phase(-kTwoPi / 4) == doctest::Approx(3 * kTwoPi / 4));
}

TEST_CASE("CP pulse placement") {
  const auto p2 = CPSequence::make(2, 1.0).pulse_times();
  REQUIRE(p2.size() == 2);
  CHECK(p2[0] == doctest::Approx(0.25));
  CHECK(p2[1] == doctest::Approx(0.75));
  const auto p3 = CPSequence::make(3, 1.0).pulse_times();
  CHECK(p3[0] == doctest::Approx(1.0 / 6));
  CHECK(p3[1] == doctest::Approx(0.5));
  CHECK(p3[2] == doctest::Approx(5.0 / 6));
  CHECK(CPSequence::make(0, 1.0).pulse_times().empty());
  CHECK_THROWS_AS(CPSequence::make(-1, 1.0), DomainError);
  CHECK_THROWS_AS(CPSequence::make(1, 0.0), DomainError);
}

TEST_CASE("trace invariants") {
  RamseyTrace t;
  t.push_back({0.01, 0.5, 100, 0.05});
  CHECK_THROWS_AS(t.push_back({0.01, 0.5, 100, 0.05}), InputError);
  CHECK_THROWS_AS(t.push_back({0.02, 0.5, 100, 0.0}), InputError);
  CHECK_THROWS_AS(t.push_back({0.02, 1.2, 100, 0.05}), InputError);
  t.push_back({0.02, 1.1, 100, 0.05});
  CHECK(t.size() == 2);
  CHECK_THROWS_AS(HeatingModel::make(1.0, 3), DomainError);
  CHECK(signal_to_population(population_to_signal(0.3)) == doctest::Approx(0.3));
}

TEST_CASE("toggling function") {
  CHECK(toggling_value(CPSequence::make(1, 1.0), 0.25) == 1);
  CHECK(toggling_value(CPSequence::make(1, 1.0), 0.75) == -1);
  CHECK(toggling_value(CPSequence::make(2, 1.0), 0.5) == -1);
  CHECK(toggling_value(CPSequence::make(2, 1.0), 0.0) == 1);
  CHECK_THROWS_AS(toggling_value(CPSequence::make(1, 1.0), 1.5), DomainError);
  CHECK_THROWS_AS(toggling_value(CPSequence::make(1, 1.0), -0.1), DomainError);
}

TEST_CASE("balanced CP sequences integrate to zero") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> tau(1e-4, 1.0);
  for (int n = 1; n <= 9; ++n) {
    for (int k = 0; k < 20; ++k) {
      const double t = tau(rng);
      CHECK(std::abs(toggling_integral(CPSequence::make(n, t))) <= 1e-12 * t);
    }
  }
  CHECK(toggling_integral(CPSequence::make(0, 0.3)) == doctest::Approx(0.3));
}

TEST_CASE("closed-form filter values") {
  CHECK(std::abs(filter_F(0, kTwoPi)) < 1e-15);
  CHECK(filter_F(1, kTwoPi) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(std::abs(filter_F(1, 2 * kTwoPi)) < 1e-15);
  CHECK_THROWS_AS(filter_F(4, 1.0), DomainError);
}

TEST_CASE("segment construction matches closed forms") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> theta(1e-3, 60.0);
  for (int n = 1; n <= 3; ++n) {
    for (int k = 0; k < 200; ++k) {
      const double th = theta(rng);
      const double omega = kTwoPi * 60.0;
      const double general = filter_F_general(CPSequence::make(n, th / omega), omega);
      CHECK(std::abs(general - std::abs(filter_F(n, th))) <= 1e-10);
    }
  }
  const double omega = kTwoPi * 60.0;
  CHECK(filter_F_general(CPSequence::make(3, kTwoPi / omega), omega) == doctest::Approx(2.0).epsilon(1e-12));
  const double f5 = filter_F_general(CPSequence::make(5, M_PI / omega), omega);
  CHECK(std::abs(f5 - oracle::filter_by_quadrature(5, M_PI / omega, omega)) <= 1e-9);
}

TEST_CASE("analytic signal examples") {
  const auto mod = ModulationParams::from_hz(50.0, 60.0);
  for (int k = 1; k <= 5; ++k) CHECK(analytic_signal(CPSequence::make(1, k / 30.0), mod) == 1.0);
  const double quarter = analytic_signal(CPSequence::make(1, 1.0 / 60.0), mod);
  CHECK(quarter == doctest::Approx(std::cyl_bessel_j(0.0, 10.0 / 3.0)).epsilon(1e-12));
  CHECK(std::abs(quarter - oracle::j0_by_quadrature(10.0 / 3.0)) <= 1e-3);
  const auto zero = ModulationParams::from_hz(0.0, 60.0);
  for (int n = 0; n <= 6; ++n) CHECK(analytic_signal(CPSequence::make(n, 0.037), zero) == 1.0);
}

TEST_CASE("analytic signal ignores the modulation phase and lies in J0 range") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    const int n = static_cast<int>(u(rng) * 6);
    const auto seq = CPSequence::make(n, 0.2 * u(rng) + 1e-4);
    const double a = 200.0 * u(rng);
    const double s0 = analytic_signal(seq, ModulationParams::from_hz(a, 60.0, 0.0));
    const double s1 = analytic_signal(seq, ModulationParams::from_hz(a, 60.0, kTwoPi * u(rng)));
    CHECK(s0 == s1);
    CHECK(s0 <= 1.0);
    CHECK(s0 >= -0.4028);
  }
}

TEST_CASE("analytic signal equals the phase average") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const int n = static_cast<int>(u(rng) * 6);
    const double omega = kTwoPi * (40.0 + 40.0 * u(rng));
    const double ratio = 10.0 * u(rng);
    const double tau = std::max(40.0 * u(rng), 1e-6) / omega;
    const auto seq = CPSequence::make(n, tau);
    const auto mod = ModulationParams::make(ratio * omega, omega);
    CHECK(std::abs(analytic_signal(seq, mod) - phase_averaged_signal(seq, mod)) <= 1e-9);
  }
}

TEST_CASE("bessel J0 against a reference") {
  double worst = 0.0;
  for (int i = -20000; i <= 20000; ++i) {
    const double z = i * 0.005;
    worst = std::max(worst, std::abs(bessel_j0(z) - std::cyl_bessel_j(0.0, std::abs(z))));
  }
  CHECK(worst <= 1e-10);
  CHECK(bessel_j0(0.0) == 1.0);
  CHECK(std::abs(bessel_j0(2.404825557695773)) <= 1e-9);
  CHECK(bessel_j0(10.0 / 3.0) == doctest::Approx(oracle::j0_by_quadrature(10.0 / 3.0)).epsilon(1e-10));
  CHECK(std::abs(bessel_j0(10.0 / 3.0) - (-0.351423)) <= 1e-6);
  CHECK_THROWS_AS(bessel_j0(std::nan("")), DomainError);
  CHECK_THROWS_AS(bessel_j0(INFINITY), DomainError);
}
