#pragma once

// Small numerical kernels shared by the schedule, bound and reparametrisation
// code: time grids, cubic interpolants, adaptive Gauss-Kronrod quadrature and
// Bessel sequences for the Chebyshev propagator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "qaconv/error.hpp"

namespace qaconv::numerics {

/// Grid on [0, horizon] that is uniform in log(1 + t). Includes both endpoints.
inline std::vector<double> log1p_grid(double horizon, int points) {
  if (!(horizon > 0.0) || points < 2) {
    throw ValidationError("log1p_grid: need horizon > 0 and at least 2 points");
  }
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double top = std::log1p(horizon);
  for (int k = 0; k < points; ++k) {
    grid[k] = std::expm1(top * k / (points - 1));
  }
  grid.front() = 0.0;
  grid.back() = horizon;
  return grid;
}

inline std::vector<double> linspace(double lo, double hi, int points) {
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) {
    out[k] = points == 1 ? lo : lo + (hi - lo) * k / (points - 1);
  }
  return out;
}

inline void require_strictly_increasing(std::span<const double> x, const char* what) {
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) {
      throw ValidationError(std::string(what) + ": abscissae must be strictly increasing");
    }
  }
}

/// Index i such that x[i] <= t < x[i+1], clamped to the valid interval range.
inline std::size_t locate(std::span<const double> x, double t) {
  auto it = std::upper_bound(x.begin(), x.end(), t);
  if (it == x.begin()) return 0;
  auto i = static_cast<std::size_t>(it - x.begin()) - 1;
  return std::min(i, x.size() - 2);
}

struct Derivatives {
  double value = 0.0;
  double first = 0.0;
  double second = 0.0;
};

/// C2 cubic spline. Clamped end slopes when given, natural otherwise.
/// Outside the node range the spline is continued by its end tangent line
/// (or held constant when `hold_outside` is set).
class CubicSpline {
 public:
  CubicSpline() = default;

  CubicSpline(std::vector<double> x, std::vector<double> y,
              std::optional<double> left_slope = std::nullopt,
              std::optional<double> right_slope = std::nullopt, bool hold_outside = false)
      : x_(std::move(x)), y_(std::move(y)), hold_outside_(hold_outside) {
    if (x_.size() != y_.size() || x_.size() < 2) {
      throw ValidationError("CubicSpline: need matching x/y with at least 2 nodes");
    }
    require_strictly_increasing(x_, "CubicSpline");
    const std::size_t n = x_.size();
    // Tridiagonal system for the second derivatives M_i.
    std::vector<double> sub(n, 0.0), diag(n, 0.0), sup(n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      sub[i] = h0 / 6.0;
      diag[i] = (h0 + h1) / 3.0;
      sup[i] = h1 / 6.0;
      rhs[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
    }
    const double hl = x_[1] - x_[0];
    const double hr = x_[n - 1] - x_[n - 2];
    if (left_slope) {
      diag[0] = hl / 3.0;
      sup[0] = hl / 6.0;
      rhs[0] = (y_[1] - y_[0]) / hl - *left_slope;
    } else {
      diag[0] = 1.0;
    }
    if (right_slope) {
      sub[n - 1] = hr / 6.0;
      diag[n - 1] = hr / 3.0;
      rhs[n - 1] = *right_slope - (y_[n - 1] - y_[n - 2]) / hr;
    } else {
      diag[n - 1] = 1.0;
    }
    // Thomas algorithm.
    for (std::size_t i = 1; i < n; ++i) {
      const double w = sub[i] / diag[i - 1];
      diag[i] -= w * sup[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m_.assign(n, 0.0);
    m_[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
      m_[i] = (rhs[i] - sup[i] * m_[i + 1]) / diag[i];
    }
  }

  Derivatives evaluate(double t) const {
    const std::size_t n = x_.size();
    if (t < x_.front() || t > x_.back()) {
      const bool left = t < x_.front();
      const std::size_t k = left ? 0 : n - 1;
      const Derivatives end = evaluate_inside(x_[k]);
      if (hold_outside_) return {end.value, 0.0, 0.0};
      return {end.value + end.first * (t - x_[k]), end.first, 0.0};
    }
    return evaluate_inside(t);
  }

  double operator()(double t) const { return evaluate(t).value; }

  std::span<const double> nodes() const { return x_; }
  std::span<const double> values() const { return y_; }

 private:
  Derivatives evaluate_inside(double t) const {
    const std::size_t i = locate(x_, t);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - t) / h;
    const double b = (t - x_[i]) / h;
    Derivatives d;
    d.value = a * y_[i] + b * y_[i + 1] +
              ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
    d.first = (y_[i + 1] - y_[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m_[i] +
              (3.0 * b * b - 1.0) / 6.0 * h * m_[i + 1];
    d.second = a * m_[i] + b * m_[i + 1];
    return d;
  }

  std::vector<double> x_, y_, m_;
  bool hold_outside_ = false;
};

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
/// Holds the end values outside the node range.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;

  MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size() || x_.size() < 2) {
      throw ValidationError("MonotoneCubic: need matching x/y with at least 2 nodes");
    }
    require_strictly_increasing(x_, "MonotoneCubic");
    const std::size_t n = x_.size();
    std::vector<double> secant(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) secant[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    d_.assign(n, 0.0);
    d_[0] = secant[0];
    d_[n - 1] = secant[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (secant[i - 1] * secant[i] <= 0.0) {
        d_[i] = 0.0;
      } else {
        const double h0 = x_[i] - x_[i - 1];
        const double h1 = x_[i + 1] - x_[i];
        const double w0 = 2.0 * h1 + h0;
        const double w1 = h1 + 2.0 * h0;
        d_[i] = (w0 + w1) / (w0 / secant[i - 1] + w1 / secant[i]);
      }
    }
  }

  double operator()(double t) const {
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    const std::size_t i = locate(x_, t);
    const double h = x_[i + 1] - x_[i];
    const double u = (t - x_[i]) / h;
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
    const double h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u);
    const double h11 = u * u * (u - 1);
    return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
  }

  std::span<const double> nodes() const { return x_; }
  std::span<const double> values() const { return y_; }

 private:
  std::vector<double> x_, y_, d_;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t panels = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

namespace detail {

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gauss_kronrod15(const F& f, double a, double b) {
  static constexpr std::array<double, 8> xgk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> wgk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * wgk[7];
  double gauss = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * xgk[j];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += wgk[j] * sum;
    if (j % 2 == 1) gauss += wg[j / 2] * sum;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-12;
  std::size_t max_panels = 200000;
};

/// Globally adaptive 15-point Gauss-Kronrod quadrature over the panels
/// delimited by `breaks` (sorted, at least two entries). The panel with the
/// largest error estimate is bisected until the summed estimate meets
/// max(abs_tol, rel_tol * |value|).
template <class F>
QuadratureResult integrate(const F& f, std::span<const double> breaks,
                           const QuadratureOptions& options = {}) {
  if (breaks.size() < 2) throw ValidationError("integrate: need at least two break points");
  std::priority_queue<detail::Panel> heap;
  QuadratureResult result;
  double value = 0.0, error = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] >= breaks[i])) throw ValidationError("integrate: breaks must be sorted");
    if (breaks[i + 1] == breaks[i]) continue;
    auto p = detail::gauss_kronrod15(f, breaks[i], breaks[i + 1]);
    value += p.value;
    error += p.error;
    heap.push(p);
  }
  result.evaluations = 15 * heap.size();
  while (!heap.empty() && error > std::max(options.abs_tol, options.rel_tol * std::abs(value)) &&
         heap.size() < options.max_panels) {
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      heap.push(worst);
      break;
    }
    auto left = detail::gauss_kronrod15(f, worst.a, mid);
    auto right = detail::gauss_kronrod15(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    result.evaluations += 30;
  }
  // Re-sum to shed the drift of the running updates.
  value = 0.0;
  error = 0.0;
  result.panels = heap.size();
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  result.value = value;
  result.error_estimate = error;
  result.converged = error <= std::max(options.abs_tol, options.rel_tol * std::abs(value));
  return result;
}

template <class F>
QuadratureResult integrate(const F& f, double a, double b, int initial_panels = 1,
                           const QuadratureOptions& options = {}) {
  const auto breaks = linspace(a, b, std::max(initial_panels, 1) + 1);
  return integrate(f, std::span<const double>(breaks), options);
}

/// J_0(x) ... J_kmax(x) for x >= 0 by Miller's downward recurrence,
/// normalised with J_0 + 2 sum J_2k = 1.
inline std::vector<double> bessel_j_sequence(double x, int kmax) {
  std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const int start = std::max(kmax, static_cast<int>(x)) + 30 +
                    static_cast<int>(std::sqrt(40.0 * std::max(kmax, static_cast<int>(x) + 1)));
  double next = 0.0, current = 1e-300, norm = 0.0;
  for (int k = start; k >= 0; --k) {
    // current holds J_k (unnormalised), next holds J_{k+1}.
    if (k <= kmax) out[k] = current;
    norm += (k == 0) ? current : (k % 2 == 0 ? 2.0 * current : 0.0);
    const double previous = 2.0 * k / x * current - next;
    next = current;
    current = previous;
    if (std::abs(current) > 1e250) {
      // Rescale everything accumulated so far.
      next *= 1e-250;
      current *= 1e-250;
      norm *= 1e-250;
      for (int j = k; j <= kmax && j < static_cast<int>(out.size()); ++j) out[j] *= 1e-250;
    }
  }
  for (double& v : out) v /= norm;
  return out;
}

/// Two-parameter least squares y ~ intercept + slope * x.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  std::vector<double> residuals;
};

inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ValidationError("fit_line: need at least two points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("fit_line: abscissae are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    fit.residuals.push_back(y[i] - fit.intercept - fit.slope * x[i]);
  }
  return fit;
}

}  // namespace qaconv::numerics
