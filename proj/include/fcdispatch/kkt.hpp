#pragma once

// First-order optimality certificate for a dispatch. With Lagrangian
//   L = sum I + lambda (P_req - sum P) + sum mu_i (I_lb - I) + sum gamma_i (I - I_ub)
// stationarity gives lambda = 1/mu for the interior level mu, and
//   gamma_j = dP_j/dI(I_ub) / mu - 1    (branches at their upper bound)
//   mu_j    = 1 - dP_j/dI(I_lb) / mu    (branches at their lower bound).
// Both are nonnegative exactly when dP/dI(lb) <= mu <= dP/dI(ub) holds across
// the sets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "fcdispatch/dispatch.hpp"

namespace fcdispatch {

inline constexpr double kMarginalResidualThreshold = 1e-6;  // W/A
inline constexpr double kMultiplierSlack = 1e-9;

struct KktReport {
  double lambda = 0.0;  // A/W
  std::vector<double> mu_multipliers;
  std::vector<double> gamma_multipliers;
  double max_equal_marginal_residual = 0.0;
  double power_residual = 0.0;  // |sum P - P_req| / max(1, P_req)
  bool multipliers_nonnegative = false;
  bool complementary_slackness = false;
  bool within_bounds = false;
  bool chain_ok = false;

  bool passed() const {
    return multipliers_nonnegative && complementary_slackness && within_bounds && chain_ok &&
           max_equal_marginal_residual <= kMarginalResidualThreshold &&
           power_residual <= kPowerResidualRelative;
  }
};

template <ConcavePowerModel Model>
KktReport verify_kkt(const DispatchResult& result, std::span<const Model> stacks) {
  KktReport rep;
  const std::size_t n = stacks.size();
  if (result.status != DispatchStatus::Optimal || result.currents.size() != n) return rep;

  const double mu = result.mu;
  rep.lambda = mu > 0.0 ? 1.0 / mu : std::numeric_limits<double>::infinity();
  rep.mu_multipliers.assign(n, 0.0);
  rep.gamma_multipliers.assign(n, 0.0);

  auto ratio = [&](double marginal) {
    return mu > 0.0 ? marginal / mu : (marginal > 0.0 ? std::numeric_limits<double>::infinity()
                                                      : 1.0);
  };
  auto same = [](double x, double y) {
    return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(y));
  };

  rep.complementary_slackness = true;
  rep.within_bounds = true;
  rep.chain_ok = true;
  for (std::size_t j = 0; j < n; ++j) {
    const double i = result.currents[j];
    const Model& s = stacks[j];
    if (!(i >= s.i_lb - 1e-9 * std::max(1.0, s.i_lb) &&
          i <= s.i_ub_eff + 1e-9 * std::max(1.0, s.i_ub_eff))) {
      rep.within_bounds = false;
    }
  }
  for (std::size_t j : result.sets.at_lb) {
    const double m = marginal_power(stacks[j], stacks[j].i_lb);
    rep.mu_multipliers[j] = 1.0 - ratio(m);
    if (!same(result.currents[j], stacks[j].i_lb)) rep.complementary_slackness = false;
    if (m > mu + kMarginalResidualThreshold) rep.chain_ok = false;
  }
  for (std::size_t j : result.sets.at_ub) {
    const double m = marginal_power(stacks[j], stacks[j].i_ub_eff);
    rep.gamma_multipliers[j] = ratio(m) - 1.0;
    if (!same(result.currents[j], stacks[j].i_ub_eff)) rep.complementary_slackness = false;
    if (m < mu - kMarginalResidualThreshold) rep.chain_ok = false;
  }
  for (std::size_t j : result.sets.interior) {
    const double i = std::max(0.0, result.currents[j]);
    const double dev = std::abs(marginal_power(stacks[j], i) - mu);
    rep.max_equal_marginal_residual = std::max(rep.max_equal_marginal_residual, dev);
  }
  if (rep.max_equal_marginal_residual > kMarginalResidualThreshold) rep.chain_ok = false;

  rep.multipliers_nonnegative =
      std::all_of(rep.mu_multipliers.begin(), rep.mu_multipliers.end(),
                  [](double v) { return v >= -kMultiplierSlack; }) &&
      std::all_of(rep.gamma_multipliers.begin(), rep.gamma_multipliers.end(),
                  [](double v) { return v >= -kMultiplierSlack; });

  double delivered = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    delivered += power(stacks[j], std::max(0.0, result.currents[j]));
  }
  rep.power_residual = std::abs(delivered - result.p_req) / std::max(1.0, std::abs(result.p_req));
  return rep;
}

template <ConcavePowerModel Model>
KktReport verify_kkt(const DispatchResult& result, const std::vector<Model>& stacks) {
  return verify_kkt(result, std::span<const Model>(stacks));
}

}  // namespace fcdispatch
