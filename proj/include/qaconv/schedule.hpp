#pragma once

// Annealing schedules gamma(t) = (delta * t + c)^(-g(t)) and the grid check of
// the sufficient convergence conditions on g:
//
//   (a) 0 < g(t) <= L with L < 1 / (3N - 2)
//   (b) |g'(t)|  <= delta c' / (delta t + c)^(1 + l)
//   (c) |g''(t)| <= delta^2 c'' (delta t + c)^(-1 - (2N-1)/(3N-2)) / |log(delta t + c)|

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qaconv/error.hpp"
#include "qaconv/numerics.hpp"

namespace qaconv {

struct ConstantG {
  double g0 = 0.0;
};

/// g(t) = g0 + g1 * (1 + t)^(-l_exp).
struct PowerDecayG {
  double g0 = 0.0;
  double g1 = 0.0;
  double l_exp = 1.0;
};

/// Cubic spline through (t_k, g_k) with zero end slopes, held constant past
/// the last node.
struct TabulatedG {
  std::vector<double> t;
  std::vector<double> g;
  numerics::CubicSpline spline;

  TabulatedG(std::vector<double> times, std::vector<double> values)
      : t(std::move(times)), g(std::move(values)), spline(t, g, 0.0, 0.0, /*hold_outside=*/true) {
    if (t.front() != 0.0) throw ValidationError("TabulatedG: table must start at t = 0");
  }
};

class GFunction {
 public:
  using Kind = std::variant<ConstantG, PowerDecayG, TabulatedG>;

  GFunction() : kind_(ConstantG{}) {}
  GFunction(ConstantG g) : kind_(g) {}
  GFunction(PowerDecayG g) : kind_(g) {}
  GFunction(TabulatedG g) : kind_(std::move(g)) {}

  static GFunction constant(double g0) { return GFunction(ConstantG{g0}); }
  static GFunction power_decay(double g0, double g1, double l_exp) {
    return GFunction(PowerDecayG{g0, g1, l_exp});
  }

  numerics::Derivatives evaluate(double t) const {
    return std::visit(
        [t](const auto& g) -> numerics::Derivatives {
          using T = std::decay_t<decltype(g)>;
          if constexpr (std::is_same_v<T, ConstantG>) {
            return {g.g0, 0.0, 0.0};
          } else if constexpr (std::is_same_v<T, PowerDecayG>) {
            const double base = 1.0 + t;
            const double p = std::pow(base, -g.l_exp);
            return {g.g0 + g.g1 * p, -g.g1 * g.l_exp * p / base,
                    g.g1 * g.l_exp * (g.l_exp + 1.0) * p / (base * base)};
          } else {
            return g.spline.evaluate(t);
          }
        },
        kind_);
  }

  double value(double t) const { return evaluate(t).value; }
  bool is_constant() const { return std::holds_alternative<ConstantG>(kind_); }
  const Kind& kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct Schedule {
  double delta = 0.0;  // >= 0; zero gives a stationary schedule
  double c = 2.0;      // > 0
  GFunction g;
  int n_spins = 1;

  Schedule() = default;
  Schedule(double delta_, double c_, GFunction g_, int n_spins_)
      : delta(delta_), c(c_), g(std::move(g_)), n_spins(n_spins_) {
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw ValidationError("Schedule: delta must be >= 0");
    if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("Schedule: c must be > 0");
    if (n_spins < 1) throw ValidationError("Schedule: n_spins must be >= 1");
  }

  double base(double t) const { return delta * t + c; }
};

inline double gamma(const Schedule& s, double t) {
  return std::pow(s.base(t), -s.g.value(t));
}

inline double gamma_prime(const Schedule& s, double t) {
  const auto g = s.g.evaluate(t);
  const double u = s.base(t);
  const double log_u = std::log(u);
  return std::pow(u, -g.value) * (-g.first * log_u - s.delta * g.value / u);
}

inline double gamma_double_prime(const Schedule& s, double t) {
  const auto g = s.g.evaluate(t);
  const double u = s.base(t);
  const double log_u = std::log(u);
  const double gam = std::pow(u, -g.value);
  const double linear = s.delta * s.delta * g.value / (u * u) - g.second * log_u -
                        2.0 * s.delta * g.first / u;
  const double slope = -g.first * log_u - s.delta * g.value / u;
  return gam * linear + gam * slope * slope;
}

/// (2N - 1) / (3N - 2), the exponent offset in the g'' condition.
inline double second_condition_exponent(int n_spins) {
  return (2.0 * n_spins - 1.0) / (3.0 * n_spins - 2.0);
}

/// Strict upper limit on sup g: 1 / (3N - 2).
inline double g_ceiling(int n_spins) { return 1.0 / (3.0 * n_spins - 2.0); }

/// max over u >= c of |log u| / u^l. The profile peaks at u = e^(1/l) with
/// value 1/(e l) and decreases on both sides of it (for u < 1 it decreases in u).
inline double compute_m(double c, double l_const) {
  if (!(l_const > 0.0)) throw ValidationError("compute_m: l must be > 0");
  if (!(c > 0.0)) throw ValidationError("compute_m: c must be > 0");
  const double at_c = std::abs(std::log(c)) / std::pow(c, l_const);
  if (c >= std::exp(1.0 / l_const)) return at_c;
  return std::max(at_c, 1.0 / (std::exp(1.0) * l_const));
}

inline double compute_m(const Schedule& s, double l_const) {
  if (!(s.delta > 0.0)) throw ValidationError("compute_m: delta must be > 0");
  return compute_m(s.c, l_const);
}

struct CertifyOptions {
  double l_const = 0.5;
  std::optional<double> c_prime;         // checked when given, else the grid minimum
  std::optional<double> c_double_prime;  // likewise
  std::optional<double> horizon;         // default 10 / delta
  int grid_points = 10000;
};

/// Result of a condition check. `c_prime` and `c_double_prime` are the
/// smallest constants that satisfy (b) and (c) on the grid when the caller did
/// not supply them; they are zero for a constant g.
struct ConditionCertificate {
  int n_spins = 0;
  double delta = 0.0;
  double c = 0.0;
  double L = 0.0;
  double g_min = 0.0;
  double l_const = 0.0;
  double c_prime = 0.0;
  double c_double_prime = 0.0;
  double m = 0.0;
  double ceiling = 0.0;  // 1 / (3N - 2)

  bool g_positive = false;
  bool l_strict = false;
  bool first_derivative_ok = false;
  bool second_derivative_ok = false;
  bool finite = false;
  bool passed = false;
  bool gamma_decreasing = false;  // diagnostic only

  std::optional<double> first_derivative_violation_t;
  std::optional<double> second_derivative_violation_t;
  std::optional<double> nonpositive_g_t;
  std::vector<std::string> reasons;

  double horizon = 0.0;
  int grid_points = 0;
  std::string grid_spacing = "log1p";
};

inline ConditionCertificate certify(const Schedule& s, const CertifyOptions& options = {}) {
  if (!(s.delta > 0.0)) throw ValidationError("certify: delta must be > 0");
  if (!(options.l_const > 0.0)) throw ValidationError("certify: l must be > 0");
  const double horizon = options.horizon.value_or(10.0 / s.delta);
  const auto grid = numerics::log1p_grid(horizon, options.grid_points);

  ConditionCertificate cert;
  cert.n_spins = s.n_spins;
  cert.delta = s.delta;
  cert.c = s.c;
  cert.l_const = options.l_const;
  cert.m = compute_m(s.c, options.l_const);
  cert.ceiling = g_ceiling(s.n_spins);
  cert.horizon = horizon;
  cert.grid_points = options.grid_points;

  const double kappa = second_condition_exponent(s.n_spins);
  const double d2 = s.delta * s.delta;
  double L = -std::numeric_limits<double>::infinity();
  double g_min = std::numeric_limits<double>::infinity();
  double need_c1 = 0.0, need_c2 = 0.0;
  bool finite = true, positive = true, decreasing = true;
  double previous_gamma = std::numeric_limits<double>::infinity();

  for (double t : grid) {
    const auto g = s.g.evaluate(t);
    const double u = s.base(t);
    if (!std::isfinite(g.value) || !std::isfinite(g.first) || !std::isfinite(g.second)) {
      finite = false;
      continue;
    }
    if (!(g.value > 0.0) && positive) {
      positive = false;
      cert.nonpositive_g_t = t;
    }
    L = std::max(L, g.value);
    g_min = std::min(g_min, g.value);
    const double ratio1 = std::abs(g.first) * std::pow(u, 1.0 + options.l_const) / s.delta;
    const double ratio2 = std::abs(g.second) * std::abs(std::log(u)) * std::pow(u, 1.0 + kappa) / d2;
    need_c1 = std::max(need_c1, ratio1);
    need_c2 = std::max(need_c2, ratio2);
    if (options.c_prime && ratio1 > *options.c_prime && !cert.first_derivative_violation_t) {
      cert.first_derivative_violation_t = t;
    }
    if (options.c_double_prime && ratio2 > *options.c_double_prime &&
        !cert.second_derivative_violation_t) {
      cert.second_derivative_violation_t = t;
    }
    const double gam = std::pow(u, -g.value);
    if (!(gam < previous_gamma)) decreasing = false;
    previous_gamma = gam;
  }

  cert.finite = finite;
  cert.L = L;
  cert.g_min = g_min;
  cert.g_positive = positive;
  cert.l_strict = L < cert.ceiling;
  cert.c_prime = options.c_prime.value_or(need_c1);
  cert.c_double_prime = options.c_double_prime.value_or(need_c2);
  cert.first_derivative_ok = !cert.first_derivative_violation_t.has_value();
  cert.second_derivative_ok = !cert.second_derivative_violation_t.has_value();
  cert.gamma_decreasing = decreasing;

  if (!finite) cert.reasons.push_back("non-finite g or derivative on grid");
  if (!positive) {
    cert.reasons.push_back("g(t) <= 0 at t = " + std::to_string(*cert.nonpositive_g_t));
  }
  if (!cert.l_strict) {
    cert.reasons.push_back("L violates strict inequality: L = " + std::to_string(L) +
                           " >= 1/(3N-2) = " + std::to_string(cert.ceiling));
  }
  if (!cert.first_derivative_ok) {
    cert.reasons.push_back("|g'| exceeds its envelope at t = " +
                           std::to_string(*cert.first_derivative_violation_t));
  }
  if (!cert.second_derivative_ok) {
    cert.reasons.push_back("|g''| exceeds its envelope at t = " +
                           std::to_string(*cert.second_derivative_violation_t));
  }
  cert.passed = finite && positive && cert.l_strict && cert.first_derivative_ok &&
                cert.second_derivative_ok;
  return cert;
}

/// delta on the scale N^(-1/2) exp(-3 b N), times `prefactor`.
inline double delta_scale(int n_spins, double b, double prefactor = 1.0) {
  return prefactor * std::exp(-3.0 * b * n_spins) / std::sqrt(static_cast<double>(n_spins));
}

// JSON: {"delta": float, "c": float, "n_spins": int,
//        "g": {"kind": "constant"|"power_decay"|"tabulated", ...}}

inline void to_json(nlohmann::json& j, const GFunction& g) {
  std::visit(
      [&j](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, ConstantG>) {
          j = {{"kind", "constant"}, {"g0", k.g0}};
        } else if constexpr (std::is_same_v<T, PowerDecayG>) {
          j = {{"kind", "power_decay"}, {"g0", k.g0}, {"g1", k.g1}, {"l_exp", k.l_exp}};
        } else {
          j = {{"kind", "tabulated"}, {"t", k.t}, {"g", k.g}};
        }
      },
      g.kind());
}

inline void to_json(nlohmann::json& j, const Schedule& s) {
  j = {{"delta", s.delta}, {"c", s.c}, {"n_spins", s.n_spins}};
  j["g"] = s.g;
}

namespace detail {
inline double require_number(const nlohmann::json& j, const char* key, const std::string& pointer) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw ConfigError(pointer + "/" + key, "required number");
  }
  return j[key].get<double>();
}
}  // namespace detail

inline GFunction g_from_json(const nlohmann::json& j, const std::string& pointer) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw ConfigError(pointer + "/kind", "required string");
  }
  const auto kind = j["kind"].get<std::string>();
  if (kind == "constant") return GFunction::constant(detail::require_number(j, "g0", pointer));
  if (kind == "power_decay") {
    return GFunction::power_decay(detail::require_number(j, "g0", pointer),
                                  detail::require_number(j, "g1", pointer),
                                  detail::require_number(j, "l_exp", pointer));
  }
  if (kind == "tabulated") {
    if (!j.contains("t") || !j["t"].is_array()) throw ConfigError(pointer + "/t", "required array");
    if (!j.contains("g") || !j["g"].is_array()) throw ConfigError(pointer + "/g", "required array");
    try {
      return GFunction(TabulatedG(j["t"].get<std::vector<double>>(), j["g"].get<std::vector<double>>()));
    } catch (const ValidationError& e) {
      throw ConfigError(pointer, e.what());
    }
  }
  throw ConfigError(pointer + "/kind", "unknown g kind '" + kind + "'");
}

inline Schedule schedule_from_json(const nlohmann::json& j, const std::string& pointer = "",
                                   std::optional<int> n_spins_default = std::nullopt) {
  if (!j.is_object()) throw ConfigError(pointer, "schedule must be an object");
  int n = 0;
  if (j.contains("n_spins")) {
    if (!j["n_spins"].is_number_integer()) throw ConfigError(pointer + "/n_spins", "must be an integer");
    n = j["n_spins"].get<int>();
  } else if (n_spins_default) {
    n = *n_spins_default;
  } else {
    throw ConfigError(pointer + "/n_spins", "required integer");
  }
  if (!j.contains("g")) throw ConfigError(pointer + "/g", "required object");
  try {
    return Schedule(detail::require_number(j, "delta", pointer), detail::require_number(j, "c", pointer),
                    g_from_json(j["g"], pointer + "/g"), n);
  } catch (const ValidationError& e) {
    throw ConfigError(pointer, e.what());
  }
}

inline void to_json(nlohmann::json& j, const ConditionCertificate& c) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  j = {{"n_spins", c.n_spins},
       {"delta", c.delta},
       {"c", c.c},
       {"L", c.L},
       {"g_min", c.g_min},
       {"l", c.l_const},
       {"c_prime", c.c_prime},
       {"c_double_prime", c.c_double_prime},
       {"m", c.m},
       {"L_ceiling", c.ceiling},
       {"checks",
        {{"g_positive", c.g_positive},
         {"L_strict", c.l_strict},
         {"first_derivative", c.first_derivative_ok},
         {"second_derivative", c.second_derivative_ok},
         {"finite", c.finite}}},
       {"violations",
        {{"first_derivative_t", opt(c.first_derivative_violation_t)},
         {"second_derivative_t", opt(c.second_derivative_violation_t)},
         {"nonpositive_g_t", opt(c.nonpositive_g_t)}}},
       {"gamma_decreasing", c.gamma_decreasing},
       {"passed", c.passed},
       {"reasons", c.reasons},
       {"grid", {{"horizon", c.horizon}, {"points", c.grid_points}, {"spacing", c.grid_spacing}}}};
}

}  // namespace qaconv
