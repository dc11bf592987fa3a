#pragma once

// Independent checks for dispatch. Neither oracle touches the observable
// table, segment location or the cubic; they share only the stack model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "fcdispatch/dispatch.hpp"
#include "fcdispatch/stack_model.hpp"

namespace fcdispatch {

enum class OracleMethod { LambdaBisection, GridSearch };

struct OracleResult {
  std::vector<double> currents;
  double total_current = 0.0;
  double total_power = 0.0;
  double mu = 0.0;  // only meaningful for LambdaBisection
  OracleMethod method = OracleMethod::LambdaBisection;
};

namespace detail {

template <ConcavePowerModel Model>
std::pair<double, double> network_power_range(std::span<const Model> stacks) {
  double lo = 0.0, hi = 0.0;
  for (const Model& s : stacks) {
    lo += power(s, s.i_lb);
    hi += power(s, s.i_ub_eff);
  }
  return {lo, hi};
}

template <ConcavePowerModel Model>
void finish(OracleResult& r, std::span<const Model> stacks) {
  r.total_current = 0.0;
  r.total_power = 0.0;
  for (std::size_t j = 0; j < stacks.size(); ++j) {
    r.total_current += r.currents[j];
    r.total_power += power(stacks[j], r.currents[j]);
  }
}

/// Current of one branch delivering `target` watts; power is increasing on
/// [i_lb, i_ub_eff]. Returns NaN if the target is out of reach.
template <ConcavePowerModel Model>
double current_for_power(const Model& s, double target) {
  double lo = s.i_lb, hi = s.i_ub_eff;
  const double p_lo = power(s, lo), p_hi = power(s, hi);
  const double slack = 1e-12 * std::max(1.0, std::abs(target));
  if (target < p_lo - slack || target > p_hi + slack) return std::numeric_limits<double>::quiet_NaN();
  if (target <= p_lo) return lo;
  if (target >= p_hi) return hi;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (power(s, mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Bisects one marginal level for the whole network; every branch takes
/// inverse_marginal(mu). Total power is continuous and nonincreasing in mu.
template <ConcavePowerModel Model>
OracleResult lambda_bisection(std::span<const Model> stacks, double p_req) {
  const auto [p_min, p_max] = detail::network_power_range(stacks);
  if (!(p_req >= p_min && p_req <= p_max)) throw InfeasibleDemand(p_req, p_min, p_max);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const Model& s : stacks) {
    lo = std::min(lo, marginal_power(s, s.i_ub_eff));
    hi = std::max(hi, marginal_power(s, s.i_lb));
  }

  OracleResult r;
  r.method = OracleMethod::LambdaBisection;
  r.currents.resize(stacks.size());
  auto power_at = [&](double mu) {
    double sum = 0.0;
    for (std::size_t j = 0; j < stacks.size(); ++j) {
      r.currents[j] = inverse_marginal(stacks[j], mu);
      sum += power(stacks[j], r.currents[j]);
    }
    return sum;
  };
  const double tol = kPowerResidualRelative * std::max(1.0, std::abs(p_req));
  double mu = hi;
  if (std::abs(power_at(hi) - p_req) > tol) {
    for (int it = 0; it < kMaxBisectionIterations; ++it) {
      mu = 0.5 * (lo + hi);
      if (!(mu > lo && mu < hi)) break;
      const double residual = power_at(mu) - p_req;
      if (residual == 0.0) break;
      if (residual > 0.0) {
        lo = mu;
      } else {
        hi = mu;
      }
    }
  }
  power_at(mu);
  r.mu = mu;
  detail::finish(r, stacks);
  return r;
}

template <ConcavePowerModel Model>
OracleResult lambda_bisection(const std::vector<Model>& stacks, double p_req) {
  return lambda_bisection(std::span<const Model>(stacks), p_req);
}

inline OracleResult lambda_bisection(const Network& net, double p_req) {
  return lambda_bisection(reduce_network(net), p_req);
}

inline constexpr std::size_t kGridMaxBranches = 3;
inline constexpr std::size_t kGridMaxPoints = 400;

/// Grid spacing used by grid_bruteforce for one branch.
template <ConcavePowerModel Model>
double grid_spacing(const Model& s, std::size_t points_per_branch) {
  return (s.i_ub_eff - s.i_lb) / static_cast<double>(points_per_branch);
}

/// Enumerates a uniform grid over every branch but the last (points_per_branch
/// subdivisions, both endpoints included, so doubling nests the grid) and
/// solves the last branch for the remaining power. Returns the feasible point
/// of least total current.
template <ConcavePowerModel Model>
OracleResult grid_bruteforce(std::span<const Model> stacks, double p_req,
                             std::size_t points_per_branch) {
  if (stacks.empty() || stacks.size() > kGridMaxBranches) {
    throw std::invalid_argument("grid_bruteforce: supports 1 to 3 branches");
  }
  if (points_per_branch == 0 || points_per_branch > kGridMaxPoints) {
    throw std::invalid_argument("grid_bruteforce: points_per_branch must be in [1, 400]");
  }
  const std::size_t free_dims = stacks.size() - 1;
  const Model& last = stacks.back();

  OracleResult best;
  best.method = OracleMethod::GridSearch;
  best.total_current = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> idx(free_dims, 0);
  std::vector<double> cur(stacks.size());
  const std::size_t nodes = points_per_branch + 1;
  while (true) {
    double used = 0.0, sum_i = 0.0;
    for (std::size_t d = 0; d < free_dims; ++d) {
      const Model& s = stacks[d];
      cur[d] = s.i_lb + (s.i_ub_eff - s.i_lb) * static_cast<double>(idx[d]) /
                            static_cast<double>(points_per_branch);
      used += power(s, cur[d]);
      sum_i += cur[d];
    }
    const double i_last = detail::current_for_power(last, p_req - used);
    if (!std::isnan(i_last) && sum_i + i_last < best.total_current) {
      cur.back() = i_last;
      best.currents = cur;
      best.total_current = sum_i + i_last;
    }
    std::size_t d = 0;
    for (; d < free_dims; ++d) {
      if (++idx[d] < nodes) break;
      idx[d] = 0;
    }
    if (d == free_dims) break;
  }
  if (best.currents.empty()) {
    const auto [p_min, p_max] = detail::network_power_range(stacks);
    throw InfeasibleDemand(p_req, p_min, p_max);
  }
  detail::finish(best, stacks);
  return best;
}

template <ConcavePowerModel Model>
OracleResult grid_bruteforce(const std::vector<Model>& stacks, double p_req,
                             std::size_t points_per_branch) {
  return grid_bruteforce(std::span<const Model>(stacks), p_req, points_per_branch);
}

struct Comparison {
  std::vector<double> current_deltas;  // dispatch - oracle, per branch
  double total_delta = 0.0;
  double max_abs_delta = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline Comparison compare(const DispatchResult& a, const OracleResult& b, double tol_current) {
  Comparison c;
  c.tolerance = tol_current;
  if (a.status != DispatchStatus::Optimal || a.currents.size() != b.currents.size()) {
    c.max_abs_delta = std::numeric_limits<double>::infinity();
    return c;
  }
  c.current_deltas.resize(a.currents.size());
  for (std::size_t j = 0; j < a.currents.size(); ++j) {
    c.current_deltas[j] = a.currents[j] - b.currents[j];
    c.max_abs_delta = std::max(c.max_abs_delta, std::abs(c.current_deltas[j]));
  }
  c.total_delta = a.total_current - b.total_current;
  c.pass = c.max_abs_delta <= tol_current;
  return c;
}

}  // namespace fcdispatch
