#pragma once

// Time-dependent Schroedinger evolution i d(psi)/dt = H(t) psi with
// H(t) = a(t) H_ising - b(t) sum_i sigma^x_i.
//
// Each step applies exp(-i H(t_mid) h) through a Chebyshev expansion on the
// matrix-free operator (exponential midpoint rule, globally second order).
// The expansion is truncated once the Bessel coefficients fall below 1e-17,
// so every step is unitary to round-off.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <vector>

#include "qaconv/error.hpp"
#include "qaconv/hash.hpp"
#include "qaconv/ising.hpp"
#include "qaconv/numerics.hpp"
#include "qaconv/schedule.hpp"
#include "qaconv/spectrum.hpp"

namespace qaconv {

/// Anything that supplies the two time-dependent coefficients of H(t).
template <class D>
concept AnnealingDrive = requires(const D& d, double t) {
  { d.ising_scale(t) } -> std::convertible_to<double>;
  { d.transverse(t) } -> std::convertible_to<double>;
};

/// H(t) = H_ising - gamma(t) sum sigma^x for a Schedule.
struct ScheduleDrive {
  const Schedule* schedule;
  explicit ScheduleDrive(const Schedule& s) : schedule(&s) {}
  double ising_scale(double) const { return 1.0; }
  double transverse(double t) const { return gamma(*schedule, t); }
};

enum class StepControl { fixed, adaptive };

struct IntegratorConfig {
  StepControl step_control = StepControl::fixed;
  double dt = 0.05;          // fixed step, or the cap in adaptive mode
  double tolerance = 1e-9;   // adaptive local error target
  double min_dt = 1e-6;      // adaptive floor
  double max_time = 0.0;     // T_max
  int record_count = 1000;   // records after t = 0, uniform in time
  double norm_tolerance = 1e-8;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> gamma;      // transverse coefficient b(t)
  std::vector<double> ground_overlap_sq;
  std::vector<double> excitation_norm;
  std::vector<double> norm_drift;
  std::vector<double> gap;        // instantaneous gap at each record
  double final_excitation = 0.0;
  bool failed = false;
  std::optional<double> first_failure_time;
  std::size_t steps = 0;
  std::size_t matvecs = 0;
  std::string problem_hash;
  std::string schedule_hash;
  StateVector final_state;
};

/// sqrt(1 - |<ground|psi>|^2) for unit vectors, i.e. the projector distance
/// for pure states. Evaluated as || psi - <ground|psi> ground || / ||psi||,
/// which keeps full relative precision when the excitation is tiny.
inline double excitation_norm(const StateVector& psi, const StateVector& ground) {
  const Complex c0 = inner(ground, psi);
  const double residual = (psi.amplitudes - c0 * ground.amplitudes).norm();
  return std::min(1.0, residual / psi.norm());
}

/// Chebyshev propagator for exp(-i h H) with H = a H_ising - b sum sigma^x.
class ChebyshevPropagator {
 public:
  explicit ChebyshevPropagator(const DiagonalIsing& diag)
      : diag_(&diag),
        lo_(diag.min_energy()),
        hi_(diag.max_energy()),
        prev_(static_cast<Eigen::Index>(diag.dim())),
        curr_(static_cast<Eigen::Index>(diag.dim())),
        next_(static_cast<Eigen::Index>(diag.dim())),
        accum_(static_cast<Eigen::Index>(diag.dim())) {}

  /// Spectral radius bound used for the expansion interval.
  double norm_bound(double a, double b) const {
    return std::max(std::abs(a * lo_), std::abs(a * hi_)) + std::abs(b) * diag_->n_spins;
  }

  void step(Eigen::VectorXcd& psi, double a, double b, double h) {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(h)) {
      throw NumericalError("evolve: non-finite Hamiltonian coefficient or step");
    }
    const double e_lo = std::min(a * lo_, a * hi_) - std::abs(b) * diag_->n_spins;
    const double e_hi = std::max(a * lo_, a * hi_) + std::abs(b) * diag_->n_spins;
    const double center = 0.5 * (e_hi + e_lo);
    const double half = 0.5 * (e_hi - e_lo) * (1.0 + 1e-12) + 1e-14;
    const double x = half * h;
    const int kmax = static_cast<int>(x) + 40 + static_cast<int>(4.0 * std::cbrt(x + 1.0));
    const auto bessel = numerics::bessel_j_sequence(x, kmax);
    int terms = kmax;
    for (int k = static_cast<int>(x) + 1; k <= kmax; ++k) {
      if (std::abs(bessel[k]) < 1e-17) {
        terms = k;
        break;
      }
    }
    // H~ = (H - center) / half; T_0 = psi, T_1 = H~ psi.
    auto apply_scaled = [&](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
      apply_scaled_hamiltonian(*diag_, a, b, in, out);
      out = (out - center * in) / half;
      ++matvecs_;
    };
    prev_ = psi;
    accum_ = bessel[0] * prev_;
    if (terms > 1) {
      apply_scaled(prev_, curr_);
      accum_ += Complex(0.0, -2.0 * bessel[1]) * curr_;
    }
    Complex phase(0.0, -1.0);  // (-i)^k
    for (int k = 2; k < terms; ++k) {
      apply_scaled(curr_, next_);
      next_ = 2.0 * next_ - prev_;
      phase *= Complex(0.0, -1.0);
      accum_ += (2.0 * bessel[k]) * phase * next_;
      std::swap(prev_, curr_);
      std::swap(curr_, next_);
    }
    psi = std::exp(Complex(0.0, -center * h)) * accum_;
  }

  std::size_t matvecs() const noexcept { return matvecs_; }

 private:
  const DiagonalIsing* diag_;
  double lo_, hi_;
  Eigen::VectorXcd prev_, curr_, next_, accum_;
  std::size_t matvecs_ = 0;
};

namespace detail {

inline DiagonalIsing scaled_diagonal(const DiagonalIsing& diag, double scale) {
  DiagonalIsing out = diag;
  for (double& e : out.energies) e *= scale;
  return out;
}

/// Step size for the adaptive mode: local error of the midpoint exponential
/// is ~ h^3 (||[H, H']|| / 12 + ||H''|| / 24).
template <AnnealingDrive Drive>
double adaptive_step(const Drive& drive, const ChebyshevPropagator& prop, double max_abs_energy, int n_spins,
                     double t, const IntegratorConfig& config) {
  const double eps = 1e-4 * std::max(1.0, t);
  const double tm = std::max(0.0, t - eps), tp = t + eps;
  const double da = (drive.ising_scale(tp) - drive.ising_scale(tm)) / (tp - tm);
  const double db = (drive.transverse(tp) - drive.transverse(tm)) / (tp - tm);
  const double dda = (drive.ising_scale(tp) - 2 * drive.ising_scale(0.5 * (tp + tm)) + drive.ising_scale(tm)) /
                     (0.25 * (tp - tm) * (tp - tm));
  const double ddb = (drive.transverse(tp) - 2 * drive.transverse(0.5 * (tp + tm)) + drive.transverse(tm)) /
                     (0.25 * (tp - tm) * (tp - tm));
  const double h_norm = prop.norm_bound(drive.ising_scale(t), drive.transverse(t));
  const double hdot = std::abs(da) * max_abs_energy + std::abs(db) * n_spins;
  const double hddot = std::abs(dda) * max_abs_energy + std::abs(ddb) * n_spins;
  const double rate = 2.0 * h_norm * hdot / 12.0 + hddot / 24.0;
  if (!(rate > 0.0)) return config.dt;
  return std::clamp(std::cbrt(config.tolerance / rate), config.min_dt, config.dt);
}

}  // namespace detail

/// Ground state of a(t) H_ising - b(t) sum sigma^x at time t.
template <AnnealingDrive Drive>
SpectrumSnapshot instantaneous_spectrum(const DiagonalIsing& diag, const Drive& drive, double t) {
  const double a = drive.ising_scale(t);
  auto snap = a == 1.0 ? diagonalize(diag, drive.transverse(t))
                       : diagonalize(detail::scaled_diagonal(diag, a), drive.transverse(t));
  snap.t = t;
  return snap;
}

/// Propagates `psi` from t0 to t0 + config.max_time, recording at
/// record_count uniformly spaced times after t0 (plus t0 itself). Times in
/// the record are measured from t0.
template <AnnealingDrive Drive>
TrajectoryRecord propagate(const DiagonalIsing& diag, const Drive& drive, StateVector psi, double t0,
                           const IntegratorConfig& config) {
  if (!(config.max_time > 0.0)) throw ValidationError("evolve: max_time must be > 0");
  if (!(config.dt > 0.0)) throw ValidationError("evolve: dt must be > 0");
  if (config.record_count < 1) throw ValidationError("evolve: record_count must be >= 1");
  if (psi.dim() != diag.dim()) throw ValidationError("evolve: state dimension mismatch");

  TrajectoryRecord rec;
  ChebyshevPropagator prop(diag);
  const double max_abs_energy = std::max(std::abs(diag.min_energy()), std::abs(diag.max_energy()));

  auto record = [&](double t_rel) {
    const double t = t0 + t_rel;
    if (!psi.amplitudes.allFinite()) {
      throw NumericalError("evolve: non-finite amplitude at t = " + std::to_string(t_rel));
    }
    const auto snap = instantaneous_spectrum(diag, drive, t);
    const double overlap = std::norm(inner(snap.ground_state, psi));
    const double drift = std::abs(psi.norm() - 1.0);
    const double excitation = excitation_norm(psi, snap.ground_state);
    rec.times.push_back(t_rel);
    rec.gamma.push_back(drive.transverse(t));
    rec.ground_overlap_sq.push_back(overlap);
    rec.excitation_norm.push_back(excitation);
    rec.norm_drift.push_back(drift);
    rec.gap.push_back(snap.gap);
    if (drift > config.norm_tolerance && !rec.failed) {
      rec.failed = true;
      rec.first_failure_time = t_rel;
    }
  };

  record(0.0);
  double t_rel = 0.0;
  for (int r = 1; r <= config.record_count; ++r) {
    const double target = config.max_time * r / config.record_count;
    while (t_rel < target) {
      double h = config.dt;
      if (config.step_control == StepControl::adaptive) {
        h = detail::adaptive_step(drive, prop, max_abs_energy, diag.n_spins, t0 + t_rel, config);
      } else {
        // Equal steps that land on the record time.
        const double remaining = target - t_rel;
        const double n = std::ceil(remaining / config.dt - 1e-9);
        h = remaining / std::max(1.0, n);
      }
      if (t_rel + h > target || target - (t_rel + h) < 1e-12 * std::max(1.0, target)) h = target - t_rel;
      const double mid = t0 + t_rel + 0.5 * h;
      prop.step(psi.amplitudes, drive.ising_scale(mid), drive.transverse(mid), h);
      t_rel += h;
      ++rec.steps;
    }
    t_rel = target;
    record(t_rel);
  }
  rec.final_excitation = rec.excitation_norm.back();
  rec.matvecs = prop.matvecs();
  rec.final_state = std::move(psi);
  return rec;
}

/// Ground state of H(0); rejects problems whose final Ising ground state is degenerate.
inline StateVector initial_state(const IsingProblem& problem, const Schedule& schedule) {
  const auto diag = build_diagonal(problem);
  require_nondegenerate_ising(diag);
  const double g0 = gamma(schedule, 0.0);
  if (!(g0 > 0.0)) throw ValidationError("initial_state: gamma(0) must be > 0");
  return diagonalize(diag, g0).ground_state;
}

inline TrajectoryRecord evolve(const IsingProblem& problem, const Schedule& schedule,
                               const IntegratorConfig& config) {
  const auto diag = build_diagonal(problem);
  auto psi0 = initial_state(problem, schedule);
  auto rec = propagate(diag, ScheduleDrive(schedule), std::move(psi0), 0.0, config);
  rec.problem_hash = content_hash_of(problem);
  rec.schedule_hash = content_hash_of(schedule);
  return rec;
}

}  // namespace qaconv
