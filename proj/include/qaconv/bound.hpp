#pragma once

// Term-by-term evaluation of the infinite-time adiabatic bound
//
//   ||P(inf) - P_ground(inf)|| <= ||H'(0)|| / D(0)^2 + lim ||H'(t)|| / D(t)^2
//       + int_0^inf ( ||H''|| / D^2 + 7 ||H'||^2 / D^3 ) dt
//
// with ||H'|| = N |gamma'| and ||H''|| = N |gamma''|. The integral is split into
// quadrature over [0, T] and closed-form tails over [T, inf). The tails
// assume a gap lower bound D >= A gamma^p and use the certificate constants:
//
//   |gamma'|  <= delta u^(-g-1) (L + m c')
//   |gamma''| <= delta^2 u^(-g-2) K + c'' delta^2 u^(-g-1-kappa),
//   K = L + 2 c' / c^l + (L + m c')^2,  u = delta t + c,  kappa = (2N-1)/(3N-2).
//
// p = N reproduces the generic exponential-gap bound; p = 0 is a constant
// gap floor (used with measured spectra).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "qaconv/dynamics.hpp"
#include "qaconv/error.hpp"
#include "qaconv/hash.hpp"
#include "qaconv/ising.hpp"
#include "qaconv/numerics.hpp"
#include "qaconv/schedule.hpp"
#include "qaconv/spectrum.hpp"

namespace qaconv {

/// 7 ||dH/dt||^2 / D^3 weight in the adiabatic bound.
inline constexpr double kFirstDerivativeWeight = 7.0;

enum class GapMode { measured, bounded };

inline std::string to_string(GapMode m) { return m == GapMode::measured ? "measured" : "bounded"; }

/// (N |gamma'(t)|, N |gamma''(t)|).
inline std::pair<double, double> derivative_norms(const Schedule& s, double t) {
  const double n = transverse_norm(s.n_spins);
  return {n * std::abs(gamma_prime(s, t)), n * std::abs(gamma_double_prime(s, t))};
}

/// Gap as a function of time plus the lower bound D >= prefactor * gamma^exponent
/// that the tails rely on beyond the quadrature horizon.
class GapModel {
 public:
  /// Interpolated measured gaps (cubic spline in log(1 + t)); `tail_floor` is
  /// the minimum gap over the transverse-field range visited after T.
  static GapModel measured(std::vector<double> times, std::vector<double> gaps, double tail_floor) {
    GapModel m;
    m.kind_ = Kind::measured;
    std::vector<double> x(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) x[i] = std::log1p(times[i]);
    m.spline_ = numerics::CubicSpline(std::move(x), gaps, std::nullopt, std::nullopt, true);
    m.times_ = std::move(times);
    m.gaps_ = std::move(gaps);
    m.prefactor_ = tail_floor;
    m.exponent_ = 0.0;
    return m;
  }

  /// D(t) = prefactor * gamma(t)^exponent.
  static GapModel power_law(const Schedule& s, double prefactor, double exponent) {
    GapModel m;
    m.kind_ = Kind::power_law;
    m.schedule_ = s;
    m.prefactor_ = prefactor;
    m.exponent_ = exponent;
    return m;
  }

  static GapModel constant(double value) {
    GapModel m;
    m.kind_ = Kind::constant;
    m.prefactor_ = value;
    m.exponent_ = 0.0;
    return m;
  }

  double operator()(double t) const {
    switch (kind_) {
      case Kind::measured:
        return spline_(std::log1p(t));
      case Kind::power_law:
        return prefactor_ * std::pow(gamma(schedule_, t), exponent_);
      case Kind::constant:
        return prefactor_;
    }
    return prefactor_;
  }

  double tail_prefactor() const noexcept { return prefactor_; }
  double tail_exponent() const noexcept { return exponent_; }
  bool is_measured() const noexcept { return kind_ == Kind::measured; }
  std::span<const double> node_times() const { return times_; }
  std::span<const double> node_gaps() const { return gaps_; }

 private:
  enum class Kind { measured, power_law, constant };
  Kind kind_ = Kind::constant;
  numerics::CubicSpline spline_;
  std::vector<double> times_, gaps_;
  Schedule schedule_;
  double prefactor_ = 1.0;
  double exponent_ = 0.0;
};

/// Constants the closed-form tails need.
struct TailConstants {
  int n_spins = 1;
  double delta = 0.0;
  double c = 0.0;
  double L = 0.0;
  double g_min = 0.0;
  double l_const = 0.0;
  double m = 0.0;
  double c_prime = 0.0;
  double c_double_prime = 0.0;
  double gap_prefactor = 1.0;  // A
  double gap_exponent = 0.0;   // p

  static TailConstants from(const ConditionCertificate& cert, const GapModel& gap) {
    TailConstants k;
    k.n_spins = cert.n_spins;
    k.delta = cert.delta;
    k.c = cert.c;
    k.L = cert.L;
    k.g_min = cert.g_min;
    k.l_const = cert.l_const;
    k.m = cert.m;
    k.c_prime = cert.c_prime;
    k.c_double_prime = cert.c_double_prime;
    k.gap_prefactor = gap.tail_prefactor();
    k.gap_exponent = gap.tail_exponent();
    return k;
  }
};

namespace detail {

/// int_{u0}^inf sup_{g in [g_min, L]} u^(slope g + shift - 2) du, times delta.
/// For u >= 1 the supremum picks the larger exponent, below 1 the smaller.
inline double power_tail(const TailConstants& k, double u0, double slope, double shift) {
  const double e_a = slope * k.L + shift;
  const double e_b = slope * k.g_min + shift;
  const double e_hi = std::max(e_a, e_b);
  const double e_lo = std::min(e_a, e_b);
  if (!(e_hi < 1.0)) {
    throw CertificateError("analytic tail diverges: exponent " + std::to_string(e_hi - 2.0) +
                           " >= -1 (condition on L violated)");
  }
  if (u0 >= 1.0) return k.delta * std::pow(u0, e_hi - 1.0) / (1.0 - e_hi);
  // [u0, 1] with the smaller exponent, [1, inf) with the larger.
  const double inner = std::abs(e_lo - 1.0) < 1e-300
                           ? -std::log(u0)
                           : (1.0 - std::pow(u0, e_lo - 1.0)) / (e_lo - 1.0);
  return k.delta * (inner + 1.0 / (1.0 - e_hi));
}

}  // namespace detail

/// Upper bound on int_T^inf 7 ||H'||^2 / D^3 dt.
inline double tail_first_derivative_sq(const TailConstants& k, double t) {
  const double n = k.n_spins;
  const double a3 = std::pow(k.gap_prefactor, 3);
  const double lm = k.L + k.m * k.c_prime;
  return kFirstDerivativeWeight * n * n / a3 * lm * lm *
         detail::power_tail(k, k.delta * t + k.c, 3.0 * k.gap_exponent - 2.0, 0.0);
}

/// Upper bound on int_T^inf ||H''|| / D^2 dt.
inline double tail_second_derivative(const TailConstants& k, double t) {
  const double n = k.n_spins;
  const double a2 = k.gap_prefactor * k.gap_prefactor;
  const double lm = k.L + k.m * k.c_prime;
  const double kappa = second_condition_exponent(k.n_spins);
  const double k1 = k.L + 2.0 * k.c_prime / std::pow(k.c, k.l_const) + lm * lm;
  const double u0 = k.delta * t + k.c;
  const double slope = 2.0 * k.gap_exponent - 1.0;
  double value = k1 * detail::power_tail(k, u0, slope, 0.0);
  if (k.c_double_prime > 0.0) value += k.c_double_prime * detail::power_tail(k, u0, slope, 1.0 - kappa);
  return n / a2 * value;
}

/// Integrands and partial sums of the finite-time bound for a fixed
/// schedule and gap model.
class BoundEvaluator {
 public:
  BoundEvaluator(Schedule schedule, GapModel gap, numerics::QuadratureOptions quad = {}, int panels = 1000)
      : schedule_(std::move(schedule)), gap_(std::move(gap)), quad_(quad), panels_(panels) {}

  double integrand_second(double t) const {
    const double d = gap_(t);
    return transverse_norm(schedule_.n_spins) * std::abs(gamma_double_prime(schedule_, t)) / (d * d);
  }

  double integrand_first_sq(double t) const {
    const double d = gap_(t);
    const double h1 = transverse_norm(schedule_.n_spins) * std::abs(gamma_prime(schedule_, t));
    return kFirstDerivativeWeight * h1 * h1 / (d * d * d);
  }

  /// ||H'(t)|| / D(t)^2.
  double boundary(double t) const {
    const double d = gap_(t);
    return transverse_norm(schedule_.n_spins) * std::abs(gamma_prime(schedule_, t)) / (d * d);
  }

  /// Panels on [a, b], uniform in log(1 + t).
  std::vector<double> breaks(double a, double b, int panels) const {
    std::vector<double> out(static_cast<std::size_t>(panels) + 1);
    const double la = std::log1p(a), lb = std::log1p(b);
    for (int i = 0; i <= panels; ++i) out[i] = std::expm1(la + (lb - la) * i / panels);
    out.front() = a;
    out.back() = b;
    return out;
  }

  numerics::QuadratureResult integrate_second(double a, double b) const {
    const auto br = breaks(a, b, panels_);
    return numerics::integrate([this](double t) { return integrand_second(t); }, std::span<const double>(br),
                               quad_);
  }

  numerics::QuadratureResult integrate_first_sq(double a, double b) const {
    const auto br = breaks(a, b, panels_);
    return numerics::integrate([this](double t) { return integrand_first_sq(t); },
                               std::span<const double>(br), quad_);
  }

  /// Right-hand side of the finite-time inequality at each (sorted) time:
  /// boundary(0) + boundary(t) + int_0^t (integrands).
  std::vector<double> finite_time_rhs(std::span<const double> times) const {
    std::vector<double> out;
    out.reserve(times.size());
    const double start = boundary(0.0);
    double cumulative = 0.0, previous = 0.0;
    for (double t : times) {
      if (t < previous) throw ValidationError("finite_time_rhs: times must be sorted");
      if (t > previous) {
        const int panels = std::max(20, panels_ / 10);
        const auto br = breaks(previous, t, panels);
        auto both = [this](double s) { return integrand_second(s) + integrand_first_sq(s); };
        cumulative += numerics::integrate(both, std::span<const double>(br), quad_).value;
      }
      out.push_back(start + boundary(t) + cumulative);
      previous = t;
    }
    return out;
  }

  const Schedule& schedule() const noexcept { return schedule_; }
  const GapModel& gap() const noexcept { return gap_; }

 private:
  Schedule schedule_;
  GapModel gap_;
  numerics::QuadratureOptions quad_;
  int panels_;
};

struct GapConstants {
  double a = 0.0;
  double b = 0.0;
  bool instance_calibrated = false;

  double prefactor(int n_spins) const {
    return a * std::sqrt(static_cast<double>(n_spins)) * std::exp(-b * n_spins);
  }
};

struct BoundOptions {
  double t_max = 0.0;
  GapMode gap_mode = GapMode::measured;
  bool include_tails = true;
  int quadrature_panels = 1000;
  double abs_tol = 1e-10;
  int gap_nodes = 200;
  int refine_steps = 24;
  int tail_gamma_points = 400;
  std::optional<GapConstants> gap_constants;  // bounded mode; calibrated on the instance when absent
  CertifyOptions certify;
  int jobs = 1;
};

struct IntegrandSample {
  double t, gamma, gap, first_norm, second_norm, integrand_second, integrand_first_sq;
};

struct BoundReport {
  double term_initial = 0.0;
  double term_limit = 0.0;
  double term_limit_proxy = 0.0;  // ||H'(T)|| / D(T)^2
  bool limit_caveat = false;      // uncertified: term_limit is the proxy
  double integral_second_deriv = 0.0;
  double integral_first_deriv_sq = 0.0;
  double tail_second_deriv = 0.0;
  double tail_first_deriv_sq = 0.0;
  double total = 0.0;
  double finite_time_rhs = 0.0;  // boundary(0) + boundary(T) + integrals on [0, T]
  bool tails_included = false;
  GapMode gap_mode = GapMode::measured;

  double t_max = 0.0;
  ConditionCertificate certificate;
  TailConstants tail_constants;
  std::optional<GapConstants> gap_constants;

  double quad_error_second = 0.0;
  double quad_error_first_sq = 0.0;
  std::size_t quad_evaluations = 0;
  std::size_t quad_panels = 0;
  bool quad_converged = false;

  double min_gap = 0.0;
  double t_at_min_gap = 0.0;
  double tail_gamma_max = 0.0;
  std::size_t gap_nodes = 0;

  std::string problem_hash;
  std::string schedule_hash;
  std::vector<IntegrandSample> samples;
};

namespace detail {

/// Log1p-spaced snapshot times on [0, T], refined around the smallest gap by
/// repeated bisection of the neighbouring intervals.
inline std::pair<std::vector<double>, std::vector<double>> measured_gap_nodes(const DiagonalIsing& diag,
                                                                             const Schedule& schedule,
                                                                             double t_max, int nodes,
                                                                             int refine_steps, int jobs) {
  auto times = numerics::log1p_grid(t_max, std::max(nodes, 4));
  auto gamma_of_t = [&](double t) { return gamma(schedule, t); };
  auto snaps = gap_profile(diag, gamma_of_t, times, jobs);
  std::vector<double> gaps(snaps.size());
  for (std::size_t i = 0; i < snaps.size(); ++i) gaps[i] = snaps[i].gap;
  for (int step = 0; step < refine_steps; ++step) {
    const auto k = static_cast<std::size_t>(std::min_element(gaps.begin(), gaps.end()) - gaps.begin());
    // Bisect whichever neighbouring interval is wider.
    std::size_t lo = k, hi = k;
    if (k == 0) {
      hi = 1;
    } else if (k + 1 == times.size()) {
      lo = k - 1;
    } else if (times[k] - times[k - 1] > times[k + 1] - times[k]) {
      lo = k - 1;
    } else {
      hi = k + 1;
    }
    const double mid = 0.5 * (times[lo] + times[hi]);
    if (!(mid > times[lo] && mid < times[hi])) break;
    const double g = diagonalize(diag, gamma(schedule, mid)).gap;
    times.insert(times.begin() + static_cast<std::ptrdiff_t>(hi), mid);
    gaps.insert(gaps.begin() + static_cast<std::ptrdiff_t>(hi), g);
  }
  return {std::move(times), std::move(gaps)};
}

/// Largest transverse field reachable for t >= T under the certificate's g range.
inline double tail_gamma_envelope(const Schedule& s, const ConditionCertificate& cert, double t) {
  const double u = s.delta * t + s.c;
  if (u >= 1.0) return std::pow(u, -cert.g_min);
  return std::max(1.0, std::pow(u, -cert.L));
}

/// min of the gap over gamma in [0, gamma_max], log-spaced grid plus a
/// golden-section polish around the best point.
inline double min_gap_over_gamma(const DiagonalIsing& diag, double gamma_max, int points) {
  std::vector<double> grid;
  grid.push_back(0.0);
  for (int i = 0; i < points; ++i) grid.push_back(gamma_max * std::pow(1e-6, 1.0 - double(i) / (points - 1)));
  double best = std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double g = diagonalize(diag, grid[i]).gap;
    if (g < best) {
      best = g;
      arg = i;
    }
  }
  double a = grid[arg == 0 ? 0 : arg - 1];
  double b = grid[std::min(arg + 1, grid.size() - 1)];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 40 && b - a > 1e-12 * std::max(1.0, b); ++it) {
    const double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    const double f1 = diagonalize(diag, x1).gap, f2 = diagonalize(diag, x2).gap;
    best = std::min({best, f1, f2});
    if (f1 < f2) {
      b = x2;
    } else {
      a = x1;
    }
  }
  return best;
}

}  // namespace detail

/// Core evaluation given a gap model and certificate.
inline BoundReport evaluate_bound(const Schedule& schedule, const GapModel& gap, const ConditionCertificate& cert,
                                  const BoundOptions& options) {
  if (!(options.t_max > 0.0)) throw ValidationError("evaluate_bound: t_max must be > 0");
  if (options.include_tails && !cert.passed) {
    std::string why;
    for (const auto& r : cert.reasons) why += (why.empty() ? "" : "; ") + r;
    throw CertificateError("evaluate_bound: analytic tails need a certified schedule (" + why + ")");
  }
  numerics::QuadratureOptions quad;
  quad.abs_tol = options.abs_tol;
  BoundEvaluator eval(schedule, gap, quad, options.quadrature_panels);

  BoundReport r;
  r.t_max = options.t_max;
  r.certificate = cert;
  r.tail_constants = TailConstants::from(cert, gap);
  r.term_initial = eval.boundary(0.0);
  r.term_limit_proxy = eval.boundary(options.t_max);
  if (cert.passed) {
    r.term_limit = 0.0;
  } else {
    r.term_limit = r.term_limit_proxy;
    r.limit_caveat = true;
  }
  const auto q2 = eval.integrate_second(0.0, options.t_max);
  const auto q1 = eval.integrate_first_sq(0.0, options.t_max);
  r.integral_second_deriv = q2.value;
  r.integral_first_deriv_sq = q1.value;
  r.quad_error_second = q2.error_estimate;
  r.quad_error_first_sq = q1.error_estimate;
  r.quad_evaluations = q1.evaluations + q2.evaluations;
  r.quad_panels = q1.panels + q2.panels;
  r.quad_converged = q1.converged && q2.converged;

  if (options.include_tails) {
    r.tail_first_deriv_sq = tail_first_derivative_sq(r.tail_constants, options.t_max);
    r.tail_second_deriv = tail_second_derivative(r.tail_constants, options.t_max);
    r.tails_included = true;
  }
  r.total = r.term_initial + r.term_limit + r.integral_second_deriv + r.integral_first_deriv_sq +
            r.tail_second_deriv + r.tail_first_deriv_sq;
  r.finite_time_rhs = r.term_initial + r.term_limit_proxy + r.integral_second_deriv + r.integral_first_deriv_sq;

  // Integrand samples for plotting.
  std::vector<double> sample_times;
  if (gap.is_measured()) {
    sample_times.assign(gap.node_times().begin(), gap.node_times().end());
  } else {
    sample_times = numerics::log1p_grid(options.t_max, std::max(options.gap_nodes, 2));
  }
  r.min_gap = std::numeric_limits<double>::infinity();
  for (double t : sample_times) {
    const auto [n1, n2] = derivative_norms(schedule, t);
    const double d = gap(t);
    r.samples.push_back({t, gamma(schedule, t), d, n1, n2, eval.integrand_second(t), eval.integrand_first_sq(t)});
    if (d < r.min_gap) {
      r.min_gap = d;
      r.t_at_min_gap = t;
    }
  }
  r.gap_nodes = sample_times.size();
  return r;
}

/// Builds the gap model for the requested mode and evaluates every term.
inline BoundReport evaluate_bound(const IsingProblem& problem, const Schedule& schedule,
                                  const BoundOptions& options) {
  if (!(schedule.delta > 0.0)) throw ValidationError("evaluate_bound: delta must be > 0");
  if (problem.n_spins() != schedule.n_spins) {
    throw ValidationError("evaluate_bound: schedule n_spins does not match the problem");
  }
  const auto diag = build_diagonal(problem);
  require_nondegenerate_ising(diag);
  CertifyOptions copt = options.certify;
  if (!copt.horizon) copt.horizon = options.t_max;
  const auto cert = certify(schedule, copt);
  const double tail_gamma = detail::tail_gamma_envelope(schedule, cert, options.t_max);

  std::optional<GapModel> gap;
  std::optional<GapConstants> constants;
  if (options.gap_mode == GapMode::measured) {
    auto [times, gaps] = detail::measured_gap_nodes(diag, schedule, options.t_max, options.gap_nodes,
                                                    options.refine_steps, options.jobs);
    const double floor = detail::min_gap_over_gamma(diag, tail_gamma, options.tail_gamma_points);
    gap = GapModel::measured(std::move(times), std::move(gaps), floor);
  } else {
    if (options.gap_constants) {
      constants = options.gap_constants;
    } else {
      // Calibrate A on this instance over the transverse fields the run can visit.
      const auto grid = numerics::log1p_grid(options.t_max, std::max(options.gap_nodes, 4));
      double gamma_top = tail_gamma;
      for (double t : grid) gamma_top = std::max(gamma_top, gamma(schedule, t));
      std::vector<double> gammas;
      for (int i = 0; i < options.tail_gamma_points; ++i) {
        gammas.push_back(gamma_top * std::pow(1e-6, 1.0 - double(i) / (options.tail_gamma_points - 1)));
      }
      const auto inst = empirical_gap_constant(problem, gammas);
      constants = GapConstants{inst.a_empirical / std::sqrt(double(problem.n_spins())), 0.0, true};
    }
    gap = GapModel::power_law(schedule, constants->prefactor(problem.n_spins()), problem.n_spins());
  }
  auto report = evaluate_bound(schedule, *gap, cert, options);
  report.gap_mode = options.gap_mode;
  report.gap_constants = constants;
  report.tail_gamma_max = tail_gamma;
  report.problem_hash = content_hash_of(problem);
  report.schedule_hash = content_hash_of(schedule);
  return report;
}

struct ComparisonVerdict {
  bool satisfied = false;
  double final_excitation = 0.0;
  double total = 0.0;
  double slack_ratio = 0.0;  // total / final_excitation (inf when the excitation is 0)
};

inline ComparisonVerdict compare(const BoundReport& report, const TrajectoryRecord& trajectory) {
  if (report.problem_hash != trajectory.problem_hash || report.schedule_hash != trajectory.schedule_hash) {
    throw ValidationError("compare: bound report and trajectory come from different problem/schedule inputs");
  }
  ComparisonVerdict v;
  v.final_excitation = trajectory.final_excitation;
  v.total = report.total;
  v.satisfied = trajectory.final_excitation <= report.total;
  v.slack_ratio = trajectory.final_excitation > 0.0 ? report.total / trajectory.final_excitation
                                                    : std::numeric_limits<double>::infinity();
  return v;
}

inline void to_json(nlohmann::json& j, const TailConstants& k) {
  j = {{"n_spins", k.n_spins}, {"delta", k.delta},   {"c", k.c},
       {"L", k.L},             {"g_min", k.g_min},   {"l", k.l_const},
       {"m", k.m},             {"c_prime", k.c_prime}, {"c_double_prime", k.c_double_prime},
       {"gap_prefactor", k.gap_prefactor}, {"gap_exponent", k.gap_exponent}};
}

inline void to_json(nlohmann::json& j, const BoundReport& r) {
  j = nlohmann::json::object();
  j["terms"] = {{"initial", r.term_initial},
                {"limit", r.term_limit},
                {"limit_proxy_at_t_max", r.term_limit_proxy},
                {"limit_caveat", r.limit_caveat},
                {"integral_second_deriv", r.integral_second_deriv},
                {"integral_first_deriv_sq", r.integral_first_deriv_sq},
                {"tail_second_deriv", r.tail_second_deriv},
                {"tail_first_deriv_sq", r.tail_first_deriv_sq}};
  j["total"] = r.total;
  j["finite_time_rhs_at_t_max"] = r.finite_time_rhs;
  j["tails_included"] = r.tails_included;
  j["gap_mode"] = to_string(r.gap_mode);
  j["t_max"] = r.t_max;
  j["constants"] = r.tail_constants;
  if (r.gap_constants) {
    j["constants"]["a_fit"] = r.gap_constants->a;
    j["constants"]["b_fit"] = r.gap_constants->b;
    j["constants"]["instance_calibrated"] = r.gap_constants->instance_calibrated;
  } else {
    j["constants"]["a_fit"] = nullptr;
    j["constants"]["b_fit"] = nullptr;
  }
  j["certificate"] = r.certificate;
  j["quadrature"] = {{"error_second", r.quad_error_second},
                     {"error_first_sq", r.quad_error_first_sq},
                     {"evaluations", r.quad_evaluations},
                     {"panels", r.quad_panels},
                     {"converged", r.quad_converged}};
  j["gap"] = {{"min", r.min_gap}, {"t_at_min", r.t_at_min_gap}, {"nodes", r.gap_nodes},
              {"tail_gamma_max", r.tail_gamma_max}, {"tail_floor_or_prefactor", r.tail_constants.gap_prefactor}};
  j["problem_hash"] = r.problem_hash;
  j["schedule_hash"] = r.schedule_hash;
}

inline void to_json(nlohmann::json& j, const ComparisonVerdict& v) {
  j = {{"satisfied", v.satisfied},
       {"final_excitation", v.final_excitation},
       {"total", v.total},
       {"slack_ratio", std::isfinite(v.slack_ratio) ? nlohmann::json(v.slack_ratio) : nlohmann::json(nullptr)}};
}

}  // namespace qaconv
