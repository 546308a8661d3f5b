#include "linecancel/bessel.hpp"

#include <cmath>
#include <numbers>

#include "linecancel/errors.hpp"

namespace linecancel {
namespace {

constexpr double kSeriesLimit = 12.0;

double j0_series(double z) {
  // sum_k (-z^2/4)^k / (k!)^2; the largest term at |z| = 12 is ~1e5, so long
  // double keeps the cancellation error near 1e-16.
  const long double q = static_cast<long double>(z) * z / 4.0L;
  long double term = 1.0L;
  long double sum = 1.0L;
  for (int k = 1; k < 200; ++k) {
    term *= -q / (static_cast<long double>(k) * k);
    sum += term;
    if (static_cast<long double>(k) > q && std::fabs(term) < 1e-21L) break;
  }
  return static_cast<double>(sum);
}

double j0_asymptotic(double z) {
  // a_k = prod_{j<=k} (-(2j-1)^2) / (k! (8z)^k); P takes even k, Q odd k,
  // each with alternating signs. Stop at the smallest term.
  double p = 0.0;
  double q = 0.0;
  double term = 1.0;
  double smallest = INFINITY;
  const double z8 = 8.0 * z;
  for (int k = 0; k < 400; ++k) {
    if (k > 0) {
      const double odd = 2.0 * k - 1.0;
      term *= -odd * odd / (k * z8);
    }
    if (std::fabs(term) >= smallest) break;
    smallest = std::fabs(term);
    if (k % 2 == 0) {
      p += ((k / 2) % 2 == 0) ? term : -term;
    } else {
      q += (((k - 1) / 2) % 2 == 0) ? term : -term;
    }
  }
  const double chi = z - 0.25 * std::numbers::pi;
  return std::sqrt(2.0 / (std::numbers::pi * z)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

double bessel_j0(double z) {
  if (!std::isfinite(z)) throw DomainError("bessel_j0: argument must be finite");
  const double az = std::fabs(z);
  return az < kSeriesLimit ? j0_series(az) : j0_asymptotic(az);
}

}  // namespace linecancel
