#include "linecancel/quantum_sim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "linecancel/errors.hpp"
#include "linecancel/parallel.hpp"

namespace linecancel {
namespace {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};

int phonon_of(int index, int levels) { return index % levels; }

// Diagonal of a a^dag + a^dag a in the truncated space: n + (n + 1), except at
// the cutoff where a^dag |N> = 0.
std::vector<double> anticommutator_diag(int cutoff) {
  std::vector<double> c(static_cast<std::size_t>(cutoff) + 1);
  for (int n = 0; n <= cutoff; ++n) c[n] = n + (n < cutoff ? n + 1.0 : 0.0);
  return c;
}

double modulation_at(const ModulationParams& mod, double t) {
  return mod.amplitude * std::cos(mod.omega_m * t + mod.phase);
}

// Heating dissipator at unit rate, diagonalized per coherence order. Order m
// couples X(i, i+m) to X(i-1, i-1+m) and X(i+1, i+1+m) with a symmetric
// tridiagonal matrix, identical in all four spin blocks and for -m.
class HeatingPropagator {
 public:
  explicit HeatingPropagator(int cutoff) : cutoff_(cutoff) {
    const auto c = anticommutator_diag(cutoff);
    for (int m = 0; m <= cutoff; ++m) {
      const int len = cutoff + 1 - m;
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(len, len);
      for (int i = 0; i < len; ++i) {
        t(i, i) = -0.5 * (c[i] + c[i + m]);
        if (i > 0) {
          const double off = std::sqrt(static_cast<double>(i) * (i + m));
          t(i, i - 1) = off;
          t(i - 1, i) = off;
        }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      vectors_.push_back(es.eigenvectors());
      values_.push_back(es.eigenvalues());
    }
  }

  // Applies exp(gamma * duration * D) in place.
  void apply(Eigen::MatrixXcd& x, double gamma_t) const {
    const int levels = cutoff_ + 1;
    for (int m = 0; m <= cutoff_; ++m) {
      const int len = levels - m;
      const Eigen::MatrixXd& v = vectors_[m];
      const Eigen::VectorXd decay = (values_[m].array() * gamma_t).exp();
      const Eigen::MatrixXd prop = v * decay.asDiagonal() * v.transpose();
      for (int bs = 0; bs < 2; ++bs) {
        for (int bt = 0; bt < 2; ++bt) {
          const int r0 = bs * levels;
          const int c0 = bt * levels;
          Eigen::VectorXcd upper(len);
          for (int i = 0; i < len; ++i) upper(i) = x(r0 + i, c0 + i + m);
          upper = prop * upper;
          for (int i = 0; i < len; ++i) x(r0 + i, c0 + i + m) = upper(i);
          if (m == 0) continue;
          Eigen::VectorXcd lower(len);
          for (int i = 0; i < len; ++i) lower(i) = x(r0 + i + m, c0 + i);
          lower = prop * lower;
          for (int i = 0; i < len; ++i) x(r0 + i + m, c0 + i) = lower(i);
        }
      }
    }
  }

 private:
  int cutoff_;
  std::vector<Eigen::MatrixXd> vectors_;
  std::vector<Eigen::VectorXd> values_;
};

class LindbladRhs {
 public:
  LindbladRhs(int cutoff, double gamma)
      : levels_(cutoff + 1), cutoff_(cutoff), gamma_(gamma), c_(anticommutator_diag(cutoff)) {
    sqrt_n_.resize(static_cast<std::size_t>(cutoff) + 2);
    for (int n = 0; n <= cutoff + 1; ++n) sqrt_n_[n] = std::sqrt(static_cast<double>(n));
  }

  void operator()(const Eigen::MatrixXcd& x, double dw, Eigen::MatrixXcd& out) const {
    const int dim = static_cast<int>(x.rows());
    for (int j = 0; j < dim; ++j) {
      const int nj = phonon_of(j, levels_);
      for (int i = 0; i < dim; ++i) {
        const int ni = phonon_of(i, levels_);
        cd val = -kI * (dw * (ni - nj)) * x(i, j);
        if (gamma_ > 0.0) {
          cd d = -0.5 * (c_[ni] + c_[nj]) * x(i, j);
          if (ni > 0 && nj > 0) d += sqrt_n_[ni] * sqrt_n_[nj] * x(i - 1, j - 1);
          if (ni < cutoff_ && nj < cutoff_) d += sqrt_n_[ni + 1] * sqrt_n_[nj + 1] * x(i + 1, j + 1);
          val += gamma_ * d;
        }
        out(i, j) = val;
      }
    }
  }

 private:
  int levels_;
  int cutoff_;
  double gamma_;
  std::vector<double> c_;
  std::vector<double> sqrt_n_;
};

bool has_modulation(const std::optional<ModulationParams>& mod) {
  return mod.has_value() && mod->amplitude > 0.0;
}

bool has_heating(const std::optional<HeatingModel>& heating) {
  return heating.has_value() && heating->nbar_dot > 0.0;
}

void evolve_rk4(Eigen::MatrixXcd& x, double duration, const std::optional<ModulationParams>& mod,
                const std::optional<HeatingModel>& heating, double t_start, int cutoff,
                const EvolutionOptions& options) {
  double scale = INFINITY;
  if (has_modulation(mod)) scale = std::min(scale, kTwoPi / mod->omega_m);
  if (has_heating(heating)) scale = std::min(scale, 1.0 / heating->nbar_dot);
  if (!std::isfinite(scale)) return;  // nothing drives the state
  const double h_max = scale / options.steps_per_scale;
  const long steps = std::max(1L, static_cast<long>(std::ceil(duration / h_max)));
  const double h = duration / static_cast<double>(steps);

  const LindbladRhs rhs(cutoff, has_heating(heating) ? heating->nbar_dot : 0.0);
  const auto dw = [&](double t) { return has_modulation(mod) ? modulation_at(*mod, t) : 0.0; };
  const int dim = static_cast<int>(x.rows());
  Eigen::MatrixXcd k1(dim, dim), k2(dim, dim), k3(dim, dim), k4(dim, dim), tmp(dim, dim);
  for (long s = 0; s < steps; ++s) {
    const double t = t_start + static_cast<double>(s) * h;
    rhs(x, dw(t), k1);
    tmp = x + (0.5 * h) * k1;
    rhs(tmp, dw(t + 0.5 * h), k2);
    tmp = x + (0.5 * h) * k2;
    rhs(tmp, dw(t + 0.5 * h), k3);
    tmp = x + h * k3;
    rhs(tmp, dw(t + h), k4);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

void evolve_exact(Eigen::MatrixXcd& x, double duration, const std::optional<ModulationParams>& mod,
                  const std::optional<HeatingModel>& heating, double t_start, int cutoff,
                  const HeatingPropagator* propagator) {
  if (has_heating(heating)) {
    if (propagator != nullptr) {
      propagator->apply(x, heating->nbar_dot * duration);
    } else {
      HeatingPropagator(cutoff).apply(x, heating->nbar_dot * duration);
    }
  }
  if (has_modulation(mod)) {
    const double phase = mod->amplitude / mod->omega_m *
                         (std::sin(mod->omega_m * (t_start + duration) + mod->phase) -
                          std::sin(mod->omega_m * t_start + mod->phase));
    const int levels = cutoff + 1;
    const int dim = static_cast<int>(x.rows());
    for (int j = 0; j < dim; ++j) {
      for (int i = 0; i < dim; ++i) {
        const int order = phonon_of(i, levels) - phonon_of(j, levels);
        if (order != 0) x(i, j) *= std::exp(-kI * (phase * order));
      }
    }
  }
}

DensityMatrix evolve(const DensityMatrix& rho, double duration,
                     const std::optional<ModulationParams>& mod,
                     const std::optional<HeatingModel>& heating, double t_start,
                     const EvolutionOptions& options, const HeatingPropagator* propagator) {
  if (!(duration >= 0.0)) throw DomainError("free_evolution: duration must be >= 0");
  DensityMatrix out = rho;
  if (duration == 0.0) return out;
  const double trace_before = rho.trace();
  if (options.integrator == Integrator::kExact) {
    evolve_exact(out.matrix(), duration, mod, heating, t_start, rho.fock_cutoff(), propagator);
  } else {
    evolve_rk4(out.matrix(), duration, mod, heating, t_start, rho.fock_cutoff(), options);
  }
  const double drift = std::abs(out.trace() - trace_before);
  if (!(drift <= 1e-6))
    throw NumericError("free_evolution: trace drifted by " + std::to_string(drift));
  return out;
}

int cutoff_of(const SequenceSpec& spec) {
  return spec.heating ? spec.heating->fock_cutoff : spec.fock_cutoff;
}

}  // namespace

DensityMatrix::DensityMatrix(int fock_cutoff) : cutoff_(fock_cutoff) {
  if (fock_cutoff < 4) throw DomainError("fock cutoff must be >= 4");
  rho_ = Eigen::MatrixXcd::Zero(dim(), dim());
}

double DensityMatrix::trace() const { return rho_.trace().real(); }

double DensityMatrix::mean_phonon() const {
  double n = 0.0;
  for (int i = 0; i < dim(); ++i) n += phonon_of(i, levels()) * rho_(i, i).real();
  return n;
}

double DensityMatrix::sigma_z() const {
  double up = 0.0;
  double down = 0.0;
  for (int n = 0; n < levels(); ++n) {
    down += rho_(index(Spin::kDown, n), index(Spin::kDown, n)).real();
    up += rho_(index(Spin::kUp, n), index(Spin::kUp, n)).real();
  }
  return up - down;
}

double DensityMatrix::hermiticity_error() const {
  return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix::min_eigenvalue() const {
  const Eigen::MatrixXcd herm = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

DensityMatrix initial_state(int fock_cutoff) {
  DensityMatrix rho(fock_cutoff);
  const int i = rho.index(Spin::kDown, 0);
  rho.matrix()(i, i) = 1.0;
  return rho;
}

DensityMatrix sideband_pulse(const DensityMatrix& rho, double angle, double phase) {
  const int dim = rho.dim();
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(dim, dim);
  for (int n = 0; n < rho.fock_cutoff(); ++n) {
    const int a = rho.index(Spin::kDown, n);
    const int b = rho.index(Spin::kUp, n + 1);
    const double half = 0.5 * angle * std::sqrt(n + 1.0);
    u(a, a) = std::cos(half);
    u(b, b) = std::cos(half);
    u(a, b) = -kI * std::exp(-kI * phase) * std::sin(half);
    u(b, a) = -kI * std::exp(kI * phase) * std::sin(half);
  }
  const double unitarity = (u.adjoint() * u - Eigen::MatrixXcd::Identity(dim, dim)).cwiseAbs().maxCoeff();
  if (unitarity > 1e-9) throw NumericError("sideband_pulse: rotation is not unitary");
  DensityMatrix out(rho.fock_cutoff());
  out.matrix() = u * rho.matrix() * u.adjoint();
  return out;
}

DensityMatrix free_evolution(const DensityMatrix& rho, double duration,
                             const std::optional<ModulationParams>& mod,
                             const std::optional<HeatingModel>& heating, double t_start,
                             const EvolutionOptions& options) {
  return evolve(rho, duration, mod, heating, t_start, options, nullptr);
}

DensityMatrix run_sequence_state(const SequenceSpec& spec, double phi,
                                 const EvolutionOptions& options) {
  const int cutoff = cutoff_of(spec);
  std::optional<ModulationParams> mod = spec.mod;
  if (mod) mod->phase = wrap_phase(phi);
  std::optional<HeatingPropagator> propagator;
  if (options.integrator == Integrator::kExact && has_heating(spec.heating)) propagator.emplace(cutoff);

  constexpr double kPi = std::numbers::pi;
  DensityMatrix rho = sideband_pulse(initial_state(cutoff), 0.5 * kPi, 0.0);
  const auto edges = spec.seq.segment_edges();
  const int n = spec.seq.n_pulses;
  for (int j = 0; j + 1 < static_cast<int>(edges.size()); ++j) {
    rho = evolve(rho, edges[j + 1] - edges[j], mod, spec.heating, edges[j], options,
                 propagator ? &*propagator : nullptr);
    if (j < n) rho = sideband_pulse(rho, kPi, 0.0);
  }
  // All pulses share one axis, so a perfect sequence ends in |up> for even n and
  // |down> for odd n. The analysis pulse phase is mirrored for odd n so that the
  // ideal signal is cos(phi(tau) - analyzer_phase) in both cases.
  const double analyzer = (n % 2 == 1) ? spec.analyzer_phase : -spec.analyzer_phase;
  return sideband_pulse(rho, 0.5 * kPi, analyzer);
}

int readout_sign(int n_pulses) { return n_pulses % 2 == 1 ? -1 : 1; }

double run_sequence(const SequenceSpec& spec, double phi, const EvolutionOptions& options) {
  return readout_sign(spec.seq.n_pulses) * run_sequence_state(spec, phi, options).sigma_z();
}

double run_sequence_averaged(const SequenceSpec& spec, int n_phases, const EvolutionOptions& options) {
  if (n_phases < 1) throw DomainError("run_sequence_averaged: n_phases must be >= 1");
  if (!has_modulation(spec.mod)) return run_sequence(spec, 0.0, options);
  std::vector<double> values(static_cast<std::size_t>(n_phases));
  parallel_for(values.size(), [&](std::size_t k) {
    values[k] = run_sequence(spec, kTwoPi * static_cast<double>(k) / n_phases, options);
  });
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / n_phases;
}

namespace {

void check_grid(const std::vector<double>& tau_grid) {
  for (std::size_t i = 0; i < tau_grid.size(); ++i) {
    if (!(tau_grid[i] >= 0.0) || !std::isfinite(tau_grid[i]))
      throw DomainError("tau grid values must be finite and >= 0");
    if (i > 0 && !(tau_grid[i] > tau_grid[i - 1]))
      throw DomainError("tau grid must be strictly increasing");
  }
}

}  // namespace

std::vector<double> heating_envelope(int n_pulses, const HeatingModel& heating,
                                     const std::vector<double>& tau_grid,
                                     const EvolutionOptions& options) {
  check_grid(tau_grid);
  std::vector<double> out(tau_grid.size(), 1.0);
  parallel_for(tau_grid.size(), [&](std::size_t i) {
    if (tau_grid[i] == 0.0) return;
    SequenceSpec spec{CPSequence::make(n_pulses, tau_grid[i]), std::nullopt, heating, 0.0,
                      heating.fock_cutoff};
    out[i] = run_sequence(spec, 0.0, options);
  });
  return out;
}

ProductModelCurves product_model_curves(int n_pulses, const ModulationParams& mod,
                                        const HeatingModel& heating,
                                        const std::vector<double>& tau_grid, int n_phases,
                                        const EvolutionOptions& options) {
  check_grid(tau_grid);
  ProductModelCurves curves;
  curves.tau = tau_grid;
  curves.c_heat = heating_envelope(n_pulses, heating, tau_grid, options);
  const std::size_t m = tau_grid.size();
  curves.c_0.assign(m, 1.0);
  curves.c_tot.assign(m, 1.0);
  curves.product.assign(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (tau_grid[i] > 0.0) {
      const auto seq = CPSequence::make(n_pulses, tau_grid[i]);
      SequenceSpec clean{seq, mod, std::nullopt, 0.0, heating.fock_cutoff};
      SequenceSpec full{seq, mod, heating, 0.0, heating.fock_cutoff};
      curves.c_0[i] = run_sequence_averaged(clean, n_phases, options);
      curves.c_tot[i] = run_sequence_averaged(full, n_phases, options);
    }
    curves.product[i] = curves.c_heat[i] * curves.c_0[i];
    curves.max_abs_error = std::max(curves.max_abs_error, std::abs(curves.c_tot[i] - curves.product[i]));
  }
  return curves;
}

double product_model_check(int n_pulses, const ModulationParams& mod, const HeatingModel& heating,
                           const std::vector<double>& tau_grid, int n_phases,
                           const EvolutionOptions& options) {
  return product_model_curves(n_pulses, mod, heating, tau_grid, n_phases, options).max_abs_error;
}

}  // namespace linecancel
