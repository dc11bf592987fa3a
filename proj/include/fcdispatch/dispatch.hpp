#pragma once

// Minimum-total-current dispatch: reduce branches, build the observable-point
// table once, then answer each demand by locating its segment and solving the
// equal-marginal system over the interior branches.

#include <cmath>
#include <cstddef>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "fcdispatch/observable_table.hpp"
#include "fcdispatch/segment_solve.hpp"
#include "fcdispatch/stack_model.hpp"

namespace fcdispatch {

enum class DispatchStatus { Optimal, InfeasibleLow, InfeasibleHigh };

enum class SegmentMethod {
  Analytic,  // closed-form cubic, square-root model only
  Numeric,   // bisection on the marginal level
};

struct DispatchResult {
  double p_req = 0.0;
  std::vector<double> currents;
  double total_current = 0.0;
  double total_power = 0.0;
  double mu = 0.0;  // common interior marginal, W/A; the power multiplier is 1/mu
  ActiveSets sets;
  DispatchStatus status = DispatchStatus::Optimal;
  double p_min = 0.0;
  double p_max = 0.0;
};

inline const char* to_string(DispatchStatus s) {
  switch (s) {
    case DispatchStatus::Optimal:
      return "optimal";
    case DispatchStatus::InfeasibleLow:
      return "infeasible_low";
    case DispatchStatus::InfeasibleHigh:
      return "infeasible_high";
  }
  return "unknown";
}

template <ConcavePowerModel Model>
DispatchResult dispatch(const DispatchTable& table, std::span<const Model> stacks, double p_req,
                        SegmentMethod method = SegmentMethod::Analytic) {
  DispatchResult res;
  res.p_req = p_req;
  res.p_min = table.p_min;
  res.p_max = table.p_max;
  if (p_req < table.p_min || !(p_req <= table.p_max)) {
    res.status = p_req < table.p_min ? DispatchStatus::InfeasibleLow
                                     : DispatchStatus::InfeasibleHigh;
    return res;
  }

  res.sets = locate_segment(table, stacks, p_req);
  res.currents.assign(stacks.size(), 0.0);
  for (std::size_t j : res.sets.at_lb) res.currents[j] = stacks[j].i_lb;
  for (std::size_t j : res.sets.at_ub) res.currents[j] = stacks[j].i_ub_eff;

  const auto& interior_idx = res.sets.interior;
  if (!interior_idx.empty()) {
    std::vector<Model> interior;
    interior.reserve(interior_idx.size());
    for (std::size_t j : interior_idx) interior.push_back(stacks[j]);

    std::vector<double> solved;
    bool analytic = false;
    if constexpr (std::is_same_v<Model, EquivalentStack>) {
      analytic = method == SegmentMethod::Analytic && res.sets.p_req_eff > 0.0;
    }
    if (analytic) {
      if constexpr (std::is_same_v<Model, EquivalentStack>) {
        auto span_in = std::span<const EquivalentStack>(interior);
        auto cands = solve_segment_sqrt(span_in, res.sets.p_req_eff);
        solved = select_feasible_root(std::span<const SegmentCandidate>(cands), span_in).currents;
      }
    } else {
      solved = solve_segment_numeric(std::span<const Model>(interior), res.sets.p_req_eff,
                                     res.sets.mu_low, res.sets.mu_high);
    }
    double mu_sum = 0.0;
    for (std::size_t k = 0; k < interior_idx.size(); ++k) {
      res.currents[interior_idx[k]] = solved[k];
      mu_sum += marginal_power(interior[k], solved[k]);
    }
    res.mu = mu_sum / static_cast<double>(interior_idx.size());
  } else {
    res.mu = res.sets.mu_high;
  }

  for (std::size_t j = 0; j < stacks.size(); ++j) {
    res.total_current += res.currents[j];
    res.total_power += power(stacks[j], res.currents[j]);
  }
  return res;
}

template <ConcavePowerModel Model>
DispatchResult dispatch(const DispatchTable& table, const std::vector<Model>& stacks,
                        double p_req, SegmentMethod method = SegmentMethod::Analytic) {
  return dispatch(table, std::span<const Model>(stacks), p_req, method);
}

/// Holds the offline products for one network so repeated demands only pay
/// for the online solve. Immutable; safe to share across threads.
class Dispatcher {
 public:
  explicit Dispatcher(const Network& net)
      : stacks_(reduce_network(net)), table_(build_table(stacks_)) {}
  explicit Dispatcher(std::vector<EquivalentStack> stacks)
      : stacks_(std::move(stacks)), table_(build_table(stacks_)) {}

  DispatchResult solve(double p_req, SegmentMethod method = SegmentMethod::Analytic) const {
    return dispatch(table_, stacks_, p_req, method);
  }

  const DispatchTable& table() const { return table_; }
  const std::vector<EquivalentStack>& stacks() const { return stacks_; }

 private:
  std::vector<EquivalentStack> stacks_;
  DispatchTable table_;
};

inline DispatchResult dispatch(const Network& net, double p_req,
                               SegmentMethod method = SegmentMethod::Analytic) {
  return Dispatcher(net).solve(p_req, method);
}

}  // namespace fcdispatch
