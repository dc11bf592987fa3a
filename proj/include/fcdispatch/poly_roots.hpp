#pragma once

// Real roots of c3 x^3 + c2 x^2 + c1 x + c0 in closed form, Newton-polished.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace fcdispatch {

struct CubicCoefficients {
  double c3 = 0.0;
  double c2 = 0.0;
  double c1 = 0.0;
  double c0 = 0.0;

  double operator()(double x) const { return ((c3 * x + c2) * x + c1) * x + c0; }
  double derivative(double x) const { return (3.0 * c3 * x + 2.0 * c2) * x + c1; }
  double max_abs() const {
    return std::max({std::abs(c3), std::abs(c2), std::abs(c1), std::abs(c0)});
  }
  double abs_sum() const {
    return std::abs(c3) + std::abs(c2) + std::abs(c1) + std::abs(c0);
  }
};

struct RealRoot {
  double value = 0.0;
  int multiplicity = 1;
};

namespace detail {

inline constexpr double kDegenerateLeading = 1e-14;
inline constexpr double kMergeRelative = 1e-9;
inline constexpr int kNewtonSteps = 5;

inline double polish(const CubicCoefficients& c, double x) {
  double fx = c(x);
  for (int k = 0; k < kNewtonSteps && fx != 0.0; ++k) {
    double d = c.derivative(x);
    if (d == 0.0 || !std::isfinite(d)) break;
    double next = x - fx / d;
    double fn = c(next);
    if (!(std::abs(fn) < std::abs(fx))) break;
    x = next;
    fx = fn;
  }
  return x;
}

inline std::vector<double> quadratic_roots(double a, double b, double c) {
  double disc = b * b - 4.0 * a * c;
  double scale = b * b + std::abs(4.0 * a * c);
  if (disc < 0.0) {
    if (-disc > 1e-14 * scale) return {};
    disc = 0.0;
  }
  if (disc == 0.0) {
    double r = -b / (2.0 * a);
    return {r, r};
  }
  double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  double r1 = q / a;
  double r2 = q != 0.0 ? c / q : -r1;
  return {r1, r2};
}

inline std::vector<double> cubic_roots_normalized(double A, double B, double C) {
  // x = t - A/3 gives t^3 + p t + q = 0
  const double shift = A / 3.0;
  const double p = B - A * A / 3.0;
  const double q = 2.0 * A * A * A / 27.0 - A * B / 3.0 + C;
  const double half_q = q / 2.0;
  const double third_p = p / 3.0;
  const double disc = half_q * half_q + third_p * third_p * third_p;
  const double disc_scale = half_q * half_q + std::abs(third_p * third_p * third_p);

  std::vector<double> t;
  if (disc_scale == 0.0) {
    t = {0.0, 0.0, 0.0};
  } else if (std::abs(disc) <= 1e-12 * disc_scale) {
    // repeated root
    if (p == 0.0) {
      t = {0.0, 0.0, 0.0};
    } else {
      double single = 3.0 * q / p;
      double twice = -1.5 * q / p;
      t = {single, twice, twice};
    }
  } else if (disc > 0.0) {
    double s = std::cbrt(-half_q - std::copysign(std::sqrt(disc), half_q));
    double root = s != 0.0 ? s - third_p / s : 0.0;
    t = {root};
  } else {
    double r = std::sqrt(-third_p);
    double cos_arg = std::clamp(-half_q / (r * r * r), -1.0, 1.0);
    double theta = std::acos(cos_arg) / 3.0;
    const double two_pi_3 = 2.0 * std::numbers::pi / 3.0;
    t = {2.0 * r * std::cos(theta), 2.0 * r * std::cos(theta - two_pi_3),
         2.0 * r * std::cos(theta + two_pi_3)};
  }
  for (double& v : t) v -= shift;
  return t;
}

inline std::vector<RealRoot> merge_sorted(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<RealRoot> out;
  for (double v : values) {
    if (!out.empty()) {
      RealRoot& last = out.back();
      double tol = kMergeRelative * std::max(1.0, std::max(std::abs(v), std::abs(last.value)));
      if (std::abs(v - last.value) <= tol) {
        ++last.multiplicity;
        continue;
      }
    }
    out.push_back({v, 1});
  }
  return out;
}

}  // namespace detail

/// All real roots in ascending order. Roots closer than 1e-9 (relative) are
/// merged and reported once with their multiplicity. A leading coefficient
/// below 1e-14 * max|c| drops the degree.
inline std::vector<RealRoot> real_roots(const CubicCoefficients& c) {
  const double scale = c.max_abs();
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw std::domain_error("real_roots: coefficients must be finite and not all zero");
  }
  const double eps = detail::kDegenerateLeading * scale;

  std::vector<double> values;
  if (std::abs(c.c3) > eps) {
    values = detail::cubic_roots_normalized(c.c2 / c.c3, c.c1 / c.c3, c.c0 / c.c3);
  } else if (std::abs(c.c2) > eps) {
    values = detail::quadratic_roots(c.c2, c.c1, c.c0);
  } else if (std::abs(c.c1) > eps) {
    values = {-c.c0 / c.c1};
  }
  for (double& v : values) v = detail::polish(c, v);
  return detail::merge_sorted(std::move(values));
}

/// Roots collapsed to distinct values.
inline std::vector<double> distinct_real_roots(const CubicCoefficients& c) {
  std::vector<double> out;
  for (const RealRoot& r : real_roots(c)) out.push_back(r.value);
  return out;
}

}  // namespace fcdispatch
