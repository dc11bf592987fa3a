#pragma once

// Online stage: given the interior branches of a located segment and the
// power they must jointly deliver, find currents with equal marginal power.
//
// For the square-root model, writing x_j = sqrt(I_j) and equating marginals
// against a reference branch r gives x_j = g_j x_r + h_j with
//   g_j = b_r / b_j,   h_j = (a_r - a_j) / (1.5 b_j),
// and the power balance sum_j (a_j x_j^2 + b_j x_j^3) = P_eff becomes a cubic
// in x_r. Each real root maps to a candidate current vector; the feasible one
// lies inside the box sqrt(i_lb) <= x_j <= sqrt(i_ub_eff).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fcdispatch/poly_roots.hpp"
#include "fcdispatch/stack_model.hpp"

namespace fcdispatch {

/// Raised when the online solve contradicts the offline table. Indicates a
/// bug, not bad input.
class InconsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline constexpr double kPowerResidualRelative = 1e-9;
inline constexpr int kMaxBisectionIterations = 200;

struct SegmentCandidate {
  double x_ref = 0.0;
  std::vector<double> x;         // sqrt-current per interior branch (may be negative)
  std::vector<double> currents;  // x^2
  double total_current = 0.0;
};

/// Interior branch with the largest |b_eq|; keeps |g_j| <= 1.
inline std::size_t reference_branch(std::span<const EquivalentStack> interior) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < interior.size(); ++j) {
    if (std::abs(interior[j].b_eq) > std::abs(interior[best].b_eq)) best = j;
  }
  return best;
}

/// Coefficients of sum_j (a_j x_j^2 + b_j x_j^3) as a cubic in x_ref, without
/// subtracting the demand.
inline CubicCoefficients segment_cubic(std::span<const EquivalentStack> interior,
                                       std::size_t ref, std::vector<double>* g_out = nullptr,
                                       std::vector<double>* h_out = nullptr) {
  const EquivalentStack& r = interior[ref];
  CubicCoefficients c;
  std::vector<double> g(interior.size()), h(interior.size());
  for (std::size_t j = 0; j < interior.size(); ++j) {
    const EquivalentStack& s = interior[j];
    g[j] = j == ref ? 1.0 : r.b_eq / s.b_eq;
    h[j] = j == ref ? 0.0 : (r.a_eq - s.a_eq) / (1.5 * s.b_eq);
    const double gj = g[j], hj = h[j];
    c.c3 += s.b_eq * gj * gj * gj;
    c.c2 += 3.0 * s.b_eq * gj * gj * hj + s.a_eq * gj * gj;
    c.c1 += 3.0 * s.b_eq * gj * hj * hj + 2.0 * s.a_eq * gj * hj;
    c.c0 += s.b_eq * hj * hj * hj + s.a_eq * hj * hj;
  }
  if (g_out) *g_out = std::move(g);
  if (h_out) *h_out = std::move(h);
  return c;
}

/// One candidate per distinct real root of the segment cubic, in ascending
/// x_ref order. Candidates are not filtered for feasibility.
inline std::vector<SegmentCandidate> solve_segment_sqrt(
    std::span<const EquivalentStack> interior, double p_req_eff) {
  if (interior.empty()) throw std::invalid_argument("solve_segment_sqrt: empty interior set");
  const std::size_t ref = reference_branch(interior);
  std::vector<double> g, h;
  CubicCoefficients c = segment_cubic(interior, ref, &g, &h);
  c.c0 -= p_req_eff;

  std::vector<SegmentCandidate> out;
  for (double root : distinct_real_roots(c)) {
    SegmentCandidate cand;
    cand.x_ref = root;
    cand.x.resize(interior.size());
    cand.currents.resize(interior.size());
    for (std::size_t j = 0; j < interior.size(); ++j) {
      cand.x[j] = j == ref ? root : g[j] * root + h[j];
      cand.currents[j] = cand.x[j] * cand.x[j];
      cand.total_current += cand.currents[j];
    }
    out.push_back(std::move(cand));
  }
  if (out.empty()) {
    throw InconsistencyError("solve_segment_sqrt: segment cubic has no real root");
  }
  return out;
}

namespace detail {

inline constexpr double kBoxSlackRelative = 1e-7;

inline bool inside_box(const SegmentCandidate& cand, std::span<const EquivalentStack> interior) {
  for (std::size_t j = 0; j < interior.size(); ++j) {
    const double lo = std::sqrt(interior[j].i_lb);
    const double hi = std::sqrt(interior[j].i_ub_eff);
    const double slack = kBoxSlackRelative * std::max(1.0, hi);
    if (!(cand.x[j] >= lo - slack && cand.x[j] <= hi + slack)) return false;
  }
  return true;
}

}  // namespace detail

/// Picks the candidate whose sqrt-currents all lie in their boxes and clamps it
/// onto the box. Squaring can carry a negative x into the current window, so
/// the test is done on x. Near-tangent duplicates (same currents within 1e-6
/// relative) collapse to the one with least total current.
inline SegmentCandidate select_feasible_root(std::span<const SegmentCandidate> candidates,
                                             std::span<const EquivalentStack> interior) {
  std::vector<const SegmentCandidate*> feasible;
  for (const SegmentCandidate& c : candidates) {
    if (c.x.size() != interior.size()) {
      throw std::invalid_argument("select_feasible_root: candidate size mismatch");
    }
    if (detail::inside_box(c, interior)) feasible.push_back(&c);
  }
  if (feasible.empty()) {
    throw InconsistencyError("select_feasible_root: no candidate satisfies the current bounds");
  }
  const SegmentCandidate* best = feasible.front();
  for (const SegmentCandidate* c : feasible) {
    for (std::size_t j = 0; j < interior.size(); ++j) {
      const double scale = std::max(1.0, std::abs(best->currents[j]));
      if (std::abs(c->currents[j] - best->currents[j]) > 1e-6 * scale) {
        throw InconsistencyError("select_feasible_root: more than one feasible candidate");
      }
    }
    if (c->total_current < best->total_current) best = c;
  }

  SegmentCandidate out = *best;
  out.total_current = 0.0;
  for (std::size_t j = 0; j < interior.size(); ++j) {
    out.x[j] = std::clamp(out.x[j], std::sqrt(interior[j].i_lb), std::sqrt(interior[j].i_ub_eff));
    out.currents[j] = std::clamp(out.x[j] * out.x[j], interior[j].i_lb, interior[j].i_ub_eff);
    out.total_current += out.currents[j];
  }
  return out;
}

/// Bisects the common marginal level on [mu_low, mu_high] until the bracket
/// stops shrinking (at most 200 halvings). Works for any strictly concave
/// model through inverse_marginal.
template <ConcavePowerModel Model>
std::vector<double> solve_segment_numeric(std::span<const Model> interior, double p_req_eff,
                                          double mu_low, double mu_high,
                                          double* mu_out = nullptr) {
  if (interior.empty()) throw std::invalid_argument("solve_segment_numeric: empty interior set");
  std::vector<double> currents(interior.size());
  auto power_at = [&](double mu) {
    double sum = 0.0;
    for (std::size_t j = 0; j < interior.size(); ++j) {
      currents[j] = inverse_marginal(interior[j], mu);
      sum += power(interior[j], currents[j]);
    }
    return sum;
  };
  const double tol = kPowerResidualRelative * std::max(1.0, std::abs(p_req_eff));
  const double p_at_high = power_at(mu_high);
  const double p_at_low = power_at(mu_low);
  if (p_req_eff < p_at_high - tol || p_req_eff > p_at_low + tol) {
    throw InconsistencyError("solve_segment_numeric: demand " + std::to_string(p_req_eff) +
                             " W not bracketed by [" + std::to_string(p_at_high) + ", " +
                             std::to_string(p_at_low) + "] W");
  }
  // Run the bracket down to rounding level: a residual of 1e-9 * P still
  // leaves current errors of order 1e-9 * P / mu when mu is small.
  double lo = mu_low, hi = mu_high, mu = 0.5 * (lo + hi);
  for (int it = 0; it < kMaxBisectionIterations; ++it) {
    mu = 0.5 * (lo + hi);
    if (!(mu > lo && mu < hi)) break;
    const double residual = power_at(mu) - p_req_eff;
    if (residual == 0.0) break;
    // Power falls as mu rises.
    if (residual > 0.0) {
      lo = mu;
    } else {
      hi = mu;
    }
  }
  power_at(mu);
  if (mu_out) *mu_out = mu;
  return currents;
}

template <ConcavePowerModel Model>
std::vector<double> solve_segment_numeric(const std::vector<Model>& interior, double p_req_eff,
                                          double mu_low, double mu_high) {
  return solve_segment_numeric(std::span<const Model>(interior), p_req_eff, mu_low, mu_high);
}

}  // namespace fcdispatch
