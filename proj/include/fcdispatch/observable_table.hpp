#pragma once

// Offline stage: observable points (marginal power of every branch at both
// ends of its window), the per-branch currents at each level, and the
// cumulative power they deliver. Online lookups bracket a demand between two
// consecutive points and derive the active sets from it.

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "fcdispatch/stack_model.hpp"

namespace fcdispatch {

enum class BoundKind { LowerBound, UpperBound };

struct ObservablePoint {
  double mu = 0.0;  // W/A
  std::size_t branch_index = 0;
  BoundKind kind = BoundKind::LowerBound;
  std::vector<double> snapshot_currents;
  double cumulative_power = 0.0;
};

/// Points sorted by mu descending; cumulative power is nondecreasing.
struct DispatchTable {
  std::vector<ObservablePoint> points;
  double p_min = 0.0;
  double p_max = 0.0;
};

struct ActiveSets {
  std::vector<std::size_t> at_lb;
  std::vector<std::size_t> interior;
  std::vector<std::size_t> at_ub;
  double p_req_eff = 0.0;
  // Marginal-level window of the located segment, mu_low <= mu <= mu_high.
  double mu_high = 0.0;
  double mu_low = 0.0;
  // Index of the observable point closing the segment (0 when p_req == p_min).
  std::size_t segment = 0;
};

/// Demand outside [p_min, p_max].
class InfeasibleDemand : public std::range_error {
 public:
  InfeasibleDemand(double p_req, double p_min, double p_max)
      : std::range_error("Required power cannot be obtained: " + std::to_string(p_req) +
                         " W outside [" + std::to_string(p_min) + ", " +
                         std::to_string(p_max) + "] W"),
        p_req_(p_req),
        p_min_(p_min),
        p_max_(p_max) {}

  double p_req() const { return p_req_; }
  double p_min() const { return p_min_; }
  double p_max() const { return p_max_; }
  bool below() const { return p_req_ < p_min_; }

 private:
  double p_req_;
  double p_min_;
  double p_max_;
};

/// Currents of every branch when the common marginal level is `mu`.
template <ConcavePowerModel Model>
std::vector<double> currents_at_level(std::span<const Model> stacks, double mu) {
  std::vector<double> out(stacks.size());
  for (std::size_t j = 0; j < stacks.size(); ++j) {
    const Model& s = stacks[j];
    if (marginal_power(s, s.i_lb) <= mu) {
      out[j] = s.i_lb;
    } else if (marginal_power(s, s.i_ub_eff) >= mu) {
      out[j] = s.i_ub_eff;
    } else {
      out[j] = inverse_marginal(s, mu);
    }
  }
  return out;
}

template <ConcavePowerModel Model>
double total_power(std::span<const Model> stacks, std::span<const double> currents) {
  double sum = 0.0;
  for (std::size_t j = 0; j < stacks.size(); ++j) sum += power(stacks[j], currents[j]);
  return sum;
}

template <ConcavePowerModel Model>
DispatchTable build_table(std::span<const Model> stacks) {
  if (stacks.empty()) throw std::invalid_argument("build_table: empty network");
  DispatchTable table;
  table.points.reserve(2 * stacks.size());
  for (std::size_t j = 0; j < stacks.size(); ++j) {
    const Model& s = stacks[j];
    table.points.push_back({marginal_power(s, s.i_lb), j, BoundKind::LowerBound, {}, 0.0});
    table.points.push_back({marginal_power(s, s.i_ub_eff), j, BoundKind::UpperBound, {}, 0.0});
  }
  std::sort(table.points.begin(), table.points.end(),
            [](const ObservablePoint& l, const ObservablePoint& r) {
              return std::make_tuple(-l.mu, l.kind, l.branch_index) <
                     std::make_tuple(-r.mu, r.kind, r.branch_index);
            });
  for (ObservablePoint& pt : table.points) {
    pt.snapshot_currents = currents_at_level(stacks, pt.mu);
    pt.cumulative_power = total_power(stacks, std::span<const double>(pt.snapshot_currents));
  }
  // Rounding in inverse_marginal can break monotonicity by an ulp on ties.
  for (std::size_t k = 1; k < table.points.size(); ++k) {
    table.points[k].cumulative_power =
        std::max(table.points[k].cumulative_power, table.points[k - 1].cumulative_power);
  }
  table.p_min = table.points.front().cumulative_power;
  table.p_max = table.points.back().cumulative_power;
  return table;
}

template <ConcavePowerModel Model>
DispatchTable build_table(const std::vector<Model>& stacks) {
  return build_table(std::span<const Model>(stacks));
}

inline std::pair<double, double> feasible_power_range(const DispatchTable& table) {
  return {table.p_min, table.p_max};
}

/// Brackets `p_req` between two consecutive observable points and splits the
/// branches by where their window sits relative to that segment's mu range.
/// A demand equal to an observable point's power goes to the segment below it;
/// a demand equal to p_min pins every branch at its lower bound.
template <ConcavePowerModel Model>
ActiveSets locate_segment(const DispatchTable& table, std::span<const Model> stacks,
                          double p_req) {
  if (!(p_req >= table.p_min && p_req <= table.p_max)) {
    throw InfeasibleDemand(p_req, table.p_min, table.p_max);
  }
  ActiveSets sets;
  const auto& pts = table.points;
  if (p_req <= pts.front().cumulative_power) {
    sets.mu_high = sets.mu_low = pts.front().mu;
    sets.segment = 0;
    double pinned = 0.0;
    for (std::size_t j = 0; j < stacks.size(); ++j) {
      sets.at_lb.push_back(j);
      pinned += power(stacks[j], stacks[j].i_lb);
    }
    sets.p_req_eff = p_req - pinned;
    return sets;
  }

  auto it = std::lower_bound(pts.begin() + 1, pts.end(), p_req,
                             [](const ObservablePoint& pt, double p) {
                               return pt.cumulative_power < p;
                             });
  const std::size_t k = static_cast<std::size_t>(it - pts.begin());
  sets.segment = k;
  sets.mu_high = pts[k - 1].mu;
  sets.mu_low = pts[k].mu;

  double pinned = 0.0;
  for (std::size_t j = 0; j < stacks.size(); ++j) {
    const Model& s = stacks[j];
    if (marginal_power(s, s.i_lb) <= sets.mu_low) {
      sets.at_lb.push_back(j);
      pinned += power(s, s.i_lb);
    } else if (marginal_power(s, s.i_ub_eff) >= sets.mu_high) {
      sets.at_ub.push_back(j);
      pinned += power(s, s.i_ub_eff);
    } else {
      sets.interior.push_back(j);
    }
  }
  sets.p_req_eff = p_req - pinned;
  return sets;
}

template <ConcavePowerModel Model>
ActiveSets locate_segment(const DispatchTable& table, const std::vector<Model>& stacks,
                          double p_req) {
  return locate_segment(table, std::span<const Model>(stacks), p_req);
}

}  // namespace fcdispatch
