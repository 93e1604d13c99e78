#pragma once

// Transverse-field Ising Hamiltonians on the 2^N computational basis.
//
// Basis convention: state z is a bit mask, bit i holds spin i, and a 0 bit is
// the sigma^z = +1 eigenstate. H(t) = H_ising - gamma(t) * sum_i sigma^x_i,
// H_ising = - sum_terms J * prod_{i in support} sigma^z_i.

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "qaconv/error.hpp"

namespace qaconv {

using Complex = std::complex<double>;

/// Diagonal storage cap for build_diagonal.
inline constexpr int kMaxDiagonalSpins = 20;
inline constexpr int kMaxProblemSpins = 62;

struct IsingTerm {
  std::vector<int> sites;  // strictly increasing
  double coefficient = 0.0;
};

class IsingProblem {
 public:
  IsingProblem() = default;

  /// Supports are sorted on construction. Repeated or out-of-range sites
  /// throw ValidationError.
  IsingProblem(int n_spins, std::vector<IsingTerm> terms) : n_spins_(n_spins), terms_(std::move(terms)) {
    if (n_spins_ < 1 || n_spins_ > kMaxProblemSpins) {
      throw ValidationError("IsingProblem: n_spins must be in [1, " +
                            std::to_string(kMaxProblemSpins) + "]");
    }
    total_magnitude_ = 0.0;
    for (auto& term : terms_) {
      if (term.sites.empty()) throw ValidationError("IsingProblem: empty support");
      std::sort(term.sites.begin(), term.sites.end());
      if (std::adjacent_find(term.sites.begin(), term.sites.end()) != term.sites.end()) {
        throw ValidationError("IsingProblem: duplicate site index in a support");
      }
      if (term.sites.front() < 0 || term.sites.back() >= n_spins_) {
        throw ValidationError("IsingProblem: site index out of range");
      }
      if (!std::isfinite(term.coefficient)) {
        throw ValidationError("IsingProblem: coefficient must be finite");
      }
      total_magnitude_ += std::abs(term.coefficient);
    }
  }

  int n_spins() const noexcept { return n_spins_; }
  const std::vector<IsingTerm>& terms() const noexcept { return terms_; }

  /// Sum of |J| over all terms.
  double total_magnitude() const noexcept { return total_magnitude_; }

  static std::uint64_t support_mask(const IsingTerm& term) {
    std::uint64_t mask = 0;
    for (int site : term.sites) mask |= std::uint64_t{1} << site;
    return mask;
  }

 private:
  int n_spins_ = 0;
  std::vector<IsingTerm> terms_;
  double total_magnitude_ = 0.0;
};

struct DiagonalIsing {
  int n_spins = 0;
  std::vector<double> energies;  // <z|H_ising|z>

  std::size_t dim() const noexcept { return energies.size(); }
  double min_energy() const { return *std::min_element(energies.begin(), energies.end()); }
  double max_energy() const { return *std::max_element(energies.begin(), energies.end()); }
};

struct StateVector {
  Eigen::VectorXcd amplitudes;

  StateVector() = default;
  explicit StateVector(Eigen::VectorXcd a) : amplitudes(std::move(a)) {}

  std::size_t dim() const noexcept { return static_cast<std::size_t>(amplitudes.size()); }
  double norm() const { return amplitudes.norm(); }
  bool is_normalized(double tolerance = 1e-8) const { return std::abs(norm() - 1.0) <= tolerance; }
};

/// Overlap <a|b>.
inline Complex inner(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw ValidationError("inner: dimension mismatch");
  return a.amplitudes.dot(b.amplitudes);
}

/// Computational basis state |z>.
inline StateVector basis_state(int n_spins, std::uint64_t z) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(Eigen::Index{1} << n_spins);
  v(static_cast<Eigen::Index>(z)) = 1.0;
  return StateVector(std::move(v));
}

inline DiagonalIsing build_diagonal(const IsingProblem& problem) {
  const int n = problem.n_spins();
  if (n > kMaxDiagonalSpins) {
    throw SizeError("build_diagonal: N = " + std::to_string(n) + " exceeds the cap of " +
                    std::to_string(kMaxDiagonalSpins) + " spins");
  }
  DiagonalIsing diag;
  diag.n_spins = n;
  const std::size_t dim = std::size_t{1} << n;
  diag.energies.assign(dim, 0.0);
  std::vector<std::uint64_t> masks;
  masks.reserve(problem.terms().size());
  for (const auto& term : problem.terms()) masks.push_back(IsingProblem::support_mask(term));
  for (std::size_t z = 0; z < dim; ++z) {
    double e = 0.0;
    for (std::size_t k = 0; k < masks.size(); ++k) {
      const bool odd = std::popcount(static_cast<std::uint64_t>(z) & masks[k]) & 1;
      const double sign = odd ? -1.0 : 1.0;
      e -= problem.terms()[k].coefficient * sign;
    }
    diag.energies[z] = e;
  }
  return diag;
}

/// out = (ising_scale * H_ising - gamma * sum_i sigma^x_i) in. Matrix-free,
/// O(N 2^N). `out` must not alias `in`.
template <class In, class Out>
void apply_scaled_hamiltonian(const DiagonalIsing& diag, double ising_scale, double gamma,
                              const In& in, Out& out) {
  const auto dim = static_cast<Eigen::Index>(diag.dim());
  for (Eigen::Index z = 0; z < dim; ++z) {
    auto acc = ising_scale * diag.energies[static_cast<std::size_t>(z)] * in(z);
    decltype(acc) flips{};
    for (int i = 0; i < diag.n_spins; ++i) flips += in(z ^ (Eigen::Index{1} << i));
    out(z) = acc - gamma * flips;
  }
}

inline StateVector apply_hamiltonian(const DiagonalIsing& diag, double gamma, const StateVector& psi) {
  if (psi.dim() != diag.dim()) {
    throw ValidationError("apply_hamiltonian: state dimension " + std::to_string(psi.dim()) +
                          " does not match 2^N = " + std::to_string(diag.dim()));
  }
  if (!std::isfinite(gamma)) throw ValidationError("apply_hamiltonian: gamma must be finite");
  StateVector out(Eigen::VectorXcd(psi.amplitudes.size()));
  apply_scaled_hamiltonian(diag, 1.0, gamma, psi.amplitudes, out.amplitudes);
  return out;
}

/// Operator norm of sum_i sigma^x_i, which is exactly N (the all-plus state).
inline double transverse_norm(int n_spins) {
  if (n_spins < 1) throw ValidationError("transverse_norm: N must be positive");
  return static_cast<double>(n_spins);
}

/// Dense real symmetric H = ising_scale * H_ising - gamma * sum sigma^x.
inline Eigen::MatrixXd dense_hamiltonian(const DiagonalIsing& diag, double gamma, double ising_scale = 1.0) {
  const auto dim = static_cast<Eigen::Index>(diag.dim());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index z = 0; z < dim; ++z) {
    h(z, z) = ising_scale * diag.energies[static_cast<std::size_t>(z)];
    for (int i = 0; i < diag.n_spins; ++i) h(z ^ (Eigen::Index{1} << i), z) -= gamma;
  }
  return h;
}

inline std::string bitstring(std::uint64_t z, int n_spins) {
  std::string s(static_cast<std::size_t>(n_spins), '0');
  for (int i = 0; i < n_spins; ++i) {
    if ((z >> i) & 1U) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

// JSON: {"n_spins": int, "terms": [{"sites": [int, ...], "j": float}, ...]}

inline void to_json(nlohmann::json& j, const IsingProblem& p) {
  j = nlohmann::json::object();
  j["n_spins"] = p.n_spins();
  auto terms = nlohmann::json::array();
  for (const auto& t : p.terms()) terms.push_back({{"sites", t.sites}, {"j", t.coefficient}});
  j["terms"] = std::move(terms);
}

inline IsingProblem problem_from_json(const nlohmann::json& j, const std::string& pointer = "") {
  if (!j.is_object()) throw ConfigError(pointer, "problem must be an object");
  if (!j.contains("n_spins") || !j["n_spins"].is_number_integer()) {
    throw ConfigError(pointer + "/n_spins", "required integer");
  }
  if (!j.contains("terms") || !j["terms"].is_array()) {
    throw ConfigError(pointer + "/terms", "required array");
  }
  std::vector<IsingTerm> terms;
  const auto& arr = j["terms"];
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string here = pointer + "/terms/" + std::to_string(k);
    const auto& t = arr[k];
    if (!t.is_object() || !t.contains("sites") || !t["sites"].is_array()) {
      throw ConfigError(here + "/sites", "required array of site indices");
    }
    if (!t.contains("j") || !t["j"].is_number()) throw ConfigError(here + "/j", "required number");
    IsingTerm term;
    for (const auto& s : t["sites"]) {
      if (!s.is_number_integer()) throw ConfigError(here + "/sites", "site indices must be integers");
      term.sites.push_back(s.get<int>());
    }
    for (std::size_t i = 1; i < term.sites.size(); ++i) {
      if (term.sites[i] <= term.sites[i - 1]) {
        throw ConfigError(here + "/sites", "site lists must be strictly increasing");
      }
    }
    term.coefficient = t["j"].get<double>();
    terms.push_back(std::move(term));
  }
  try {
    return IsingProblem(j["n_spins"].get<int>(), std::move(terms));
  } catch (const ValidationError& e) {
    throw ConfigError(pointer, e.what());
  }
}

}  // namespace qaconv
