#pragma once

// Bounded-coefficient annealing i dpsi/dt = (s H_ising - (1 - s) sum sigma^x) psi
// maps onto the transverse-field form through the time change
// t~ = int_0^t s(u) du, with gamma(t~) = (1 - s) / s.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "qaconv/error.hpp"
#include "qaconv/numerics.hpp"
#include "qaconv/schedule.hpp"

namespace qaconv {

/// log cosh t without overflow.
inline double log_cosh(double t) {
  const double a = std::abs(t);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

struct TanhS {};

/// s defined through its transverse-field image: gamma(t~) = schedule gamma at t~,
/// s = 1 / (1 + gamma). The map t(t~) = t~ + int_0^t~ gamma is tabulated up
/// to `t_tilde_horizon`.
struct RationalFromScheduleS {
  Schedule schedule;
  double t_tilde_horizon = 0.0;
  int points = 2000;
  numerics::MonotoneCubic t_tilde_of_t;  // inverse of the tabulated t(t~)
};

struct TabulatedS {
  std::vector<double> t;
  std::vector<double> s;
  numerics::MonotoneCubic interpolant;
};

class SFunction {
 public:
  using Kind = std::variant<TanhS, RationalFromScheduleS, TabulatedS>;

  static SFunction tanh() { return SFunction(TanhS{}); }

  static SFunction rational_from_schedule(const Schedule& schedule, double t_tilde_horizon, int points = 2000) {
    if (!(t_tilde_horizon > 0.0)) throw ValidationError("SFunction: t~ horizon must be > 0");
    RationalFromScheduleS k{schedule, t_tilde_horizon, points, {}};
    // dt/dt~ = 1/s = 1 + gamma(t~).
    auto tt = numerics::log1p_grid(t_tilde_horizon, points);
    std::vector<double> t(tt.size(), 0.0);
    for (std::size_t i = 1; i < tt.size(); ++i) {
      const auto q = numerics::integrate([&](double u) { return 1.0 + gamma(schedule, u); }, tt[i - 1], tt[i]);
      t[i] = t[i - 1] + q.value;
    }
    k.t_tilde_of_t = numerics::MonotoneCubic(std::move(t), std::move(tt));
    return SFunction(std::move(k));
  }

  static SFunction tabulated(std::vector<double> t, std::vector<double> s) {
    if (t.size() != s.size() || t.size() < 2) throw ValidationError("SFunction: need matching t/s tables");
    if (t.front() != 0.0) throw ValidationError("SFunction: table must start at t = 0");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!(s[i] >= 0.0 && s[i] <= 1.0)) throw ValidationError("SFunction: s must lie in [0, 1]");
      if (i > 0 && s[i] < s[i - 1]) throw ValidationError("SFunction: s must be nondecreasing");
    }
    numerics::MonotoneCubic interp(t, s);
    return SFunction(TabulatedS{std::move(t), std::move(s), std::move(interp)});
  }

  double operator()(double t) const {
    return std::visit(
        [t](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, TanhS>) {
            return std::tanh(t);
          } else if constexpr (std::is_same_v<T, RationalFromScheduleS>) {
            return 1.0 / (1.0 + gamma(k.schedule, k.t_tilde_of_t(t)));
          } else {
            return k.interpolant(t);
          }
        },
        kind_);
  }

  const Kind& kind() const noexcept { return kind_; }

 private:
  explicit SFunction(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

/// t~ = int_0^t s(u) du. Closed form for tanh (log cosh t).
inline double t_tilde(const SFunction& s_fn, double t) {
  if (!(t >= 0.0)) throw ValidationError("t_tilde: t must be >= 0");
  if (t == 0.0) return 0.0;
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, TanhS>) {
          return log_cosh(t);
        } else if constexpr (std::is_same_v<T, RationalFromScheduleS>) {
          return k.t_tilde_of_t(t);
        } else {
          // Panels at the table nodes inside [0, t].
          std::vector<double> br{0.0};
          for (double x : k.t)
            if (x > 0.0 && x < t) br.push_back(x);
          br.push_back(t);
          return numerics::integrate([&](double u) { return k.interpolant(u); }, std::span<const double>(br))
              .value;
        }
      },
      s_fn.kind());
}

/// (1 - s) / s, the transverse field in the rescaled time.
inline double gamma_from_s(double s) {
  if (!(s > 0.0)) throw std::domain_error("annealing not started: s(t) = 0 leaves gamma(t~) undefined");
  return (1.0 - s) / s;
}

inline double gamma_of_ttilde(const SFunction& s_fn, double t) { return gamma_from_s(s_fn(t)); }

struct SFromSchedule {
  double s = 0.0;           // 1 / (1 + k t~^(-g(t~)))
  double asymptotic = 0.0;  // 1 - k t~^(-g(t~))
};

/// Inverts gamma(t~) = k t~^(-g(t~)) for s, with g taken from the schedule and
/// `proportionality` the constant k.
inline SFromSchedule s_from_schedule(const Schedule& schedule, double t_tilde_value, double proportionality = 1.0) {
  if (!(t_tilde_value > 0.0)) throw ValidationError("s_from_schedule: t~ must be > 0");
  const double power = proportionality * std::pow(t_tilde_value, -schedule.g.value(t_tilde_value));
  return {1.0 / (1.0 + power), 1.0 - power};
}

/// Tabulated pairs (t, t~) with inverse lookup.
struct ReparamMap {
  std::vector<double> t;
  std::vector<double> t_tilde;
  std::vector<double> s;

  /// t as a function of t~ by monotone interpolation.
  double t_of_t_tilde(double value) const {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (x.empty() || t_tilde[i] > x.back()) {
        x.push_back(t_tilde[i]);
        y.push_back(t[i]);
      }
    }
    return numerics::MonotoneCubic(std::move(x), std::move(y))(value);
  }

  bool is_monotone() const {
    for (std::size_t i = 1; i < t_tilde.size(); ++i) {
      if (t_tilde[i] < t_tilde[i - 1]) return false;
      if (s[i - 1] > 0.0 && !(t_tilde[i] > t_tilde[i - 1])) return false;
    }
    return true;
  }
};

inline ReparamMap build_reparam_map(const SFunction& s_fn, std::span<const double> t_grid) {
  numerics::require_strictly_increasing(t_grid, "build_reparam_map");
  if (t_grid.empty() || t_grid.front() != 0.0) throw ValidationError("build_reparam_map: grid must start at 0");
  ReparamMap map;
  for (double t : t_grid) {
    map.t.push_back(t);
    map.t_tilde.push_back(t_tilde(s_fn, t));
    map.s.push_back(s_fn(t));
  }
  if (!map.is_monotone()) throw NumericalError("build_reparam_map: t~ is not monotone on the grid");
  return map;
}

/// Drive for the bounded form in the original time: a(t) = s, b(t) = 1 - s,
/// started at t0.
struct BoundedFormDrive {
  const SFunction* s_fn;
  double t0 = 0.0;
  double ising_scale(double tau) const { return (*s_fn)(t0 + tau); }
  double transverse(double tau) const { return 1.0 - (*s_fn)(t0 + tau); }
};

/// Drive in the rescaled time for s = tanh t, started at t~0 = log cosh t0:
/// gamma(t~) = (1 - s) / s with s = sqrt(1 - exp(-2 t~)).
struct TanhRescaledDrive {
  double t_tilde0 = 0.0;
  double ising_scale(double) const { return 1.0; }
  double transverse(double tau) const {
    const double s = std::sqrt(-std::expm1(-2.0 * (t_tilde0 + tau)));
    return (1.0 - s) / s;
  }
};

/// Start time where s(t0) = s_start for the tanh preset.
inline double tanh_start_time(double s_start = 0.1) {
  if (!(s_start > 0.0 && s_start < 1.0)) throw ValidationError("tanh_start_time: s_start must lie in (0, 1)");
  return std::atanh(s_start);
}

inline void to_json(nlohmann::json& j, const SFunction& s) {
  std::visit(
      [&j](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, TanhS>) {
          j = {{"kind", "tanh"}};
        } else if constexpr (std::is_same_v<T, RationalFromScheduleS>) {
          j = {{"kind", "rational_from_schedule"},
               {"schedule", k.schedule},
               {"t_tilde_horizon", k.t_tilde_horizon},
               {"points", k.points}};
        } else {
          j = {{"kind", "tabulated"}, {"t", k.t}, {"s", k.s}};
        }
      },
      s.kind());
}

inline SFunction s_function_from_json(const nlohmann::json& j, const std::string& pointer = "") {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw ConfigError(pointer + "/kind", "required string");
  }
  const auto kind = j["kind"].get<std::string>();
  try {
    if (kind == "tanh") return SFunction::tanh();
    if (kind == "rational_from_schedule") {
      if (!j.contains("schedule")) throw ConfigError(pointer + "/schedule", "required object");
      const auto sched = schedule_from_json(j["schedule"], pointer + "/schedule");
      const double horizon = detail::require_number(j, "t_tilde_horizon", pointer);
      const int points = j.value("points", 2000);
      return SFunction::rational_from_schedule(sched, horizon, points);
    }
    if (kind == "tabulated") {
      if (!j.contains("t") || !j["t"].is_array()) throw ConfigError(pointer + "/t", "required array");
      if (!j.contains("s") || !j["s"].is_array()) throw ConfigError(pointer + "/s", "required array");
      return SFunction::tabulated(j["t"].get<std::vector<double>>(), j["s"].get<std::vector<double>>());
    }
  } catch (const ValidationError& e) {
    throw ConfigError(pointer, e.what());
  }
  throw ConfigError(pointer + "/kind", "unknown s kind '" + kind + "'");
}

inline void to_json(nlohmann::json& j, const ReparamMap& m) {
  j = {{"t", m.t}, {"t_tilde", m.t_tilde}, {"s", m.s}};
}

}  // namespace qaconv
