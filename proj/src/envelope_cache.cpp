#include "linecancel/envelope_cache.hpp"

#include <algorithm>
#include <cmath>

#include "linecancel/errors.hpp"

namespace linecancel {

HeatingEnvelopeCache::HeatingEnvelopeCache(int n_pulses, int fock_cutoff, double x_max, int points)
    : n_pulses_(n_pulses), fock_cutoff_(fock_cutoff), x_max_(x_max) {
  if (n_pulses < 0) throw DomainError("envelope cache: pulse count must be >= 0");
  if (!(x_max > 0.0) || points < 2) throw DomainError("envelope cache: bad grid");
  dx_ = x_max / (points - 1);
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) grid[i] = i * dx_;
  // Unit heating rate: tau equals x.
  table_ = heating_envelope(n_pulses, HeatingModel::make(1.0, fock_cutoff), grid,
                            EvolutionOptions{Integrator::kExact});
}

double HeatingEnvelopeCache::operator()(double tau, double nbar_dot) const {
  const double x = std::max(0.0, tau * nbar_dot);
  if (x >= x_max_) return table_.back();
  const double pos = x / dx_;
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return table_[i] + frac * (table_[i + 1] - table_[i]);
}

}  // namespace linecancel
