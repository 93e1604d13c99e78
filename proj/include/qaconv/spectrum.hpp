#pragma once

// Instantaneous spectra of H = H_ising - gamma * sum sigma^x. H is real
// symmetric in the computational basis, so all eigenvectors are real.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "qaconv/error.hpp"
#include "qaconv/ising.hpp"
#include "qaconv/numerics.hpp"
#include "qaconv/schedule.hpp"

namespace qaconv {

inline constexpr int kDenseMaxSpins = 10;
inline constexpr int kIterativeMaxSpins = 14;
inline constexpr double kDegeneracyTolerance = 1e-10;

struct SpectrumSnapshot {
  double t = 0.0;
  double gamma_value = 0.0;
  std::vector<double> eigenvalues;  // lowest `count`, ascending
  double eps0 = 0.0;
  double eps1 = 0.0;
  double gap = 0.0;
  StateVector ground_state;
  bool anomaly = false;  // near-degenerate ground state at gamma > 0
};

namespace detail {

inline void fix_phase(Eigen::VectorXd& v) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (v(k) < 0) v = -v;
}

inline std::pair<Eigen::VectorXd, Eigen::VectorXd> dense_lowest(const DiagonalIsing& diag, double gamma,
                                                               int count) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense_hamiltonian(diag, gamma));
  if (solver.info() != Eigen::Success) throw NumericalError("diagonalize: dense eigensolver failed");
  const auto k = std::min<Eigen::Index>(count, solver.eigenvalues().size());
  return {solver.eigenvalues().head(k), solver.eigenvectors().col(0)};
}

/// Lanczos with full reorthogonalisation on the matrix-free operator.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> lanczos_lowest(const DiagonalIsing& diag, double gamma,
                                                                 int count, double tolerance = 1e-12,
                                                                 int max_iterations = 400) {
  const auto dim = static_cast<Eigen::Index>(diag.dim());
  const int kmax = static_cast<int>(std::min<Eigen::Index>(max_iterations, dim));
  Eigen::MatrixXd basis(dim, kmax);
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = uni(rng);
  v.normalize();
  std::vector<double> alpha, beta;
  Eigen::VectorXd w(dim);
  Eigen::VectorXd values;
  Eigen::MatrixXd ritz;
  for (int k = 0; k < kmax; ++k) {
    basis.col(k) = v;
    apply_scaled_hamiltonian(diag, 1.0, gamma, v, w);
    const double a = v.dot(w);
    alpha.push_back(a);
    w -= a * v;
    if (k > 0) w -= beta.back() * basis.col(k - 1);
    for (int pass = 0; pass < 2; ++pass) {
      w -= basis.leftCols(k + 1) * (basis.leftCols(k + 1).transpose() * w);
    }
    const double b = w.norm();
    const int m = k + 1;
    if (m >= count) {
      Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        tri(i, i) = alpha[i];
        if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(tri);
      values = small.eigenvalues();
      ritz = small.eigenvectors();
      bool converged = true;
      for (int j = 0; j < count; ++j) {
        if (std::abs(b * ritz(m - 1, j)) > tolerance * std::max(1.0, std::abs(values(j)))) converged = false;
      }
      if (converged || b < 1e-14 || m == kmax) {
        Eigen::VectorXd ground = basis.leftCols(m) * ritz.col(0);
        ground.normalize();
        if (!converged && b >= 1e-14) throw NumericalError("diagonalize: Lanczos did not converge");
        return {values.head(count), ground};
      }
    }
    beta.push_back(b);
    v = w / b;
  }
  throw NumericalError("diagonalize: Lanczos did not converge");
}

}  // namespace detail

/// Lowest `count` eigenpairs of H at the given transverse field. Dense up to
/// N = 10, Lanczos up to N = 14.
inline SpectrumSnapshot diagonalize(const DiagonalIsing& diag, double gamma_value, int count = 2) {
  if (count < 2) throw ValidationError("diagonalize: count must be >= 2");
  if (diag.n_spins > kIterativeMaxSpins) {
    throw SizeError("diagonalize: N = " + std::to_string(diag.n_spins) + " exceeds the cap of " +
                    std::to_string(kIterativeMaxSpins));
  }
  const auto dim = static_cast<int>(diag.dim());
  count = std::min(count, dim);
  auto [values, ground] = diag.n_spins <= kDenseMaxSpins ? detail::dense_lowest(diag, gamma_value, count)
                                                         : detail::lanczos_lowest(diag, gamma_value, count);
  detail::fix_phase(ground);
  SpectrumSnapshot snap;
  snap.gamma_value = gamma_value;
  snap.eigenvalues.assign(values.data(), values.data() + values.size());
  snap.eps0 = values(0);
  snap.eps1 = values(1);
  snap.gap = std::max(0.0, snap.eps1 - snap.eps0);
  snap.ground_state = StateVector(ground.cast<Complex>());
  snap.anomaly = gamma_value > 0.0 && snap.gap < kDegeneracyTolerance;
  return snap;
}

/// Throws DegeneracyError when the two lowest Ising energies coincide.
inline void require_nondegenerate_ising(const DiagonalIsing& diag, double tolerance = kDegeneracyTolerance) {
  std::vector<std::size_t> order(diag.dim());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::partial_sort(order.begin(), order.begin() + std::min<std::size_t>(order.size(), 2), order.end(),
                    [&](std::size_t a, std::size_t b) { return diag.energies[a] < diag.energies[b]; });
  if (order.size() < 2) return;
  const double e0 = diag.energies[order[0]];
  if (diag.energies[order[1]] - e0 < tolerance) {
    std::string states;
    for (std::size_t z = 0; z < diag.dim(); ++z) {
      if (diag.energies[z] - e0 < tolerance) {
        if (!states.empty()) states += ", ";
        states += "|" + bitstring(z, diag.n_spins) + ">";
      }
    }
    throw DegeneracyError("degenerate Ising ground state (E = " + std::to_string(e0) + "): " + states);
  }
}

/// Snapshots at each time of a nondecreasing grid. Workers split the grid
/// into contiguous blocks; output order follows the grid.
template <class GammaOfT>
std::vector<SpectrumSnapshot> gap_profile(const DiagonalIsing& diag, const GammaOfT& gamma_of_t,
                                          std::span<const double> t_grid, int jobs = 1) {
  require_nondegenerate_ising(diag);
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (t_grid[i] < t_grid[i - 1]) throw ValidationError("gap_profile: time grid must be monotone");
  }
  std::vector<SpectrumSnapshot> out(t_grid.size());
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      out[i] = diagonalize(diag, gamma_of_t(t_grid[i]));
      out[i].t = t_grid[i];
    }
  };
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(t_grid.size())));
  if (jobs == 1) {
    work(0, t_grid.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t block = (t_grid.size() + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
      const std::size_t lo = w * block, hi = std::min(t_grid.size(), lo + block);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

inline std::vector<SpectrumSnapshot> gap_profile(const IsingProblem& problem, const Schedule& schedule,
                                                 std::span<const double> t_grid, int jobs = 1) {
  return gap_profile(
      build_diagonal(problem), [&](double t) { return gamma(schedule, t); }, t_grid, jobs);
}

struct GapFitInstance {
  int n_spins = 0;
  std::size_t index = 0;      // position in the ensemble
  double a_empirical = 0.0;   // min over the grid of gap / gamma^N
  double gamma_at_min = 0.0;  // where that minimum occurs
};

struct GapBoundFit {
  double a_fit = 0.0;
  double b_fit = 0.0;
  std::map<int, double> a_by_size;  // min over instances of that size
  std::map<int, double> residuals;  // log-space residuals of the fit
  std::vector<GapFitInstance> instances;
  std::vector<double> gamma_grid;

  /// A(N) = a sqrt(N) exp(-b N).
  double prefactor(int n_spins) const {
    return a_fit * std::sqrt(static_cast<double>(n_spins)) * std::exp(-b_fit * n_spins);
  }
};

/// min over the gamma grid (gamma > 0 entries) of gap / gamma^N for one instance.
inline GapFitInstance empirical_gap_constant(const IsingProblem& problem, std::span<const double> gamma_grid) {
  const auto diag = build_diagonal(problem);
  require_nondegenerate_ising(diag);
  GapFitInstance inst;
  inst.n_spins = problem.n_spins();
  inst.a_empirical = std::numeric_limits<double>::infinity();
  for (double g : gamma_grid) {
    if (!(g > 0.0)) continue;
    const auto snap = diagonalize(diag, g);
    const double ratio = snap.gap / std::pow(g, problem.n_spins());
    if (ratio < inst.a_empirical) {
      inst.a_empirical = ratio;
      inst.gamma_at_min = g;
    }
  }
  if (!(inst.a_empirical > 0.0) || !std::isfinite(inst.a_empirical)) {
    throw NumericalError("fit_gap_constants: nonpositive empirical gap constant");
  }
  return inst;
}

/// Fits log A(N) - log(N)/2 = log a - b N over the sizes present.
inline GapBoundFit fit_gap_constants(const std::vector<IsingProblem>& ensemble, std::vector<double> gamma_grid) {
  GapBoundFit fit;
  fit.gamma_grid = gamma_grid;
  for (std::size_t k = 0; k < ensemble.size(); ++k) {
    auto inst = empirical_gap_constant(ensemble[k], gamma_grid);
    inst.index = k;
    auto [it, inserted] = fit.a_by_size.emplace(inst.n_spins, inst.a_empirical);
    if (!inserted) it->second = std::min(it->second, inst.a_empirical);
    fit.instances.push_back(inst);
  }
  if (fit.a_by_size.size() < 2) {
    throw ValidationError("fit_gap_constants: underdetermined fit, need at least two distinct system sizes");
  }
  std::vector<double> xs, ys;
  for (const auto& [n, a] : fit.a_by_size) {
    xs.push_back(n);
    ys.push_back(std::log(a) - 0.5 * std::log(static_cast<double>(n)));
  }
  const auto line = numerics::fit_line(xs, ys);
  fit.a_fit = std::exp(line.intercept);
  fit.b_fit = -line.slope;
  std::size_t i = 0;
  for (const auto& [n, a] : fit.a_by_size) fit.residuals[n] = line.residuals[i++];
  return fit;
}

inline void to_json(nlohmann::json& j, const GapBoundFit& f) {
  auto sizes = nlohmann::json::array();
  for (const auto& [n, a] : f.a_by_size) {
    sizes.push_back({{"n_spins", n}, {"a_empirical", a}, {"residual", f.residuals.at(n)}});
  }
  auto insts = nlohmann::json::array();
  for (const auto& inst : f.instances) {
    insts.push_back({{"index", inst.index},
                     {"n_spins", inst.n_spins},
                     {"a_empirical", inst.a_empirical},
                     {"gamma_at_min", inst.gamma_at_min}});
  }
  j = {{"a_fit", f.a_fit}, {"b_fit", f.b_fit}, {"sizes", sizes}, {"instances", insts},
       {"gamma_grid", f.gamma_grid}};
}

}  // namespace qaconv
