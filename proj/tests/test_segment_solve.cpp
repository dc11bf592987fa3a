#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fcdispatch/dispatch.hpp"
#include "fcdispatch/segment_solve.hpp"
#include "test_support.hpp"

namespace fcdispatch {
namespace {

std::vector<EquivalentStack> three() { return reduce_network(testing::three_stack_network()); }

TEST(SolveSegmentSqrt, ThreeCandidatesAtEightKilowatts) {
  const auto stacks = three();
  const auto cands = solve_segment_sqrt(stacks, 8000.0);
  ASSERT_EQ(cands.size(), 3u);
  std::vector<double> totals;
  for (const auto& c : cands) totals.push_back(c.total_current);
  std::sort(totals.begin(), totals.end());
  EXPECT_NEAR(totals[0], 191.94, 0.05);
  EXPECT_NEAR(totals[1], 234.32, 0.05);
  EXPECT_NEAR(totals[2], 9300.17, 0.05);

  const SegmentCandidate pick = select_feasible_root(std::span<const SegmentCandidate>(cands),
                                                     std::span<const EquivalentStack>(stacks));
  EXPECT_NEAR(pick.currents[0], 81.02, 0.01);
  EXPECT_NEAR(pick.currents[1], 136.23, 0.01);
  EXPECT_NEAR(pick.currents[2], 17.07, 0.01);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(marginal_power(stacks[j], pick.currents[j]), 30.143, 1e-3);
  }
}

TEST(SolveSegmentSqrt, NegativeRootRejectedInSqrtSpace) {
  const auto stacks = three();
  const auto cands = solve_segment_sqrt(stacks, 8000.0);
  // candidate with total ~191.94 A: stack 2's current fits its window but its
  // sqrt-current is negative
  const auto it = std::min_element(cands.begin(), cands.end(), [](const auto& l, const auto& r) {
    return l.total_current < r.total_current;
  });
  EXPECT_NEAR(it->currents[0], 1.93, 0.01);
  EXPECT_NEAR(it->currents[1], 36.6, 0.01);
  EXPECT_NEAR(it->currents[2], 153.407, 0.01);
  const double g2 = stacks[0].b_eq / stacks[1].b_eq;
  const double h2 = (stacks[0].a_eq - stacks[1].a_eq) / (1.5 * stacks[1].b_eq);
  EXPECT_NEAR(g2 * std::sqrt(it->currents[0]) + h2, -6.05, 0.01);
  EXPECT_NEAR(it->x[1], -6.05, 0.01);
  EXPECT_GE(it->currents[1], stacks[1].i_lb);
  EXPECT_LE(it->currents[1], stacks[1].i_ub_eff);
  EXPECT_LT(it->currents[0], stacks[0].i_lb);  // stack 1 is also below its floor
  const std::vector<SegmentCandidate> only{*it};
  EXPECT_THROW(select_feasible_root(std::span<const SegmentCandidate>(only),
                                    std::span<const EquivalentStack>(stacks)),
               InconsistencyError);
}

TEST(SolveSegmentSqrt, SingleStackSegment) {
  const std::vector<EquivalentStack> one{reduce_branch({{{40.0, -1.0, 1.0}}, 0.0, 500.0})};
  const double target = 40.0 * 100.0 - 1.0 * 1000.0;  // I = 100
  const auto cands = solve_segment_sqrt(one, target);
  const auto pick = select_feasible_root(std::span<const SegmentCandidate>(cands),
                                         std::span<const EquivalentStack>(one));
  EXPECT_NEAR(pick.currents[0], 100.0, 1e-9);
  EXPECT_NEAR(solve_segment_numeric(one, target, marginal_power(one[0], 500.0), 40.0)[0], 100.0,
              1e-7);
}

TEST(SolveSegmentSqrt, SingleCandidateSelectedUnchanged) {
  const std::vector<EquivalentStack> one{reduce_branch({{{40.0, -1.0, 1.0}}, 0.0, 500.0})};
  SegmentCandidate c;
  c.x_ref = 10.0;
  c.x = {10.0};
  c.currents = {100.0};
  c.total_current = 100.0;
  const std::vector<SegmentCandidate> only{c};
  const auto pick = select_feasible_root(std::span<const SegmentCandidate>(only),
                                         std::span<const EquivalentStack>(one));
  EXPECT_EQ(pick.currents, c.currents);
  EXPECT_EQ(pick.total_current, 100.0);
}

TEST(SolveSegmentSqrt, ReferenceInvariant) {
  const auto stacks = three();
  std::vector<std::vector<double>> picks;
  for (std::size_t ref = 0; ref < 3; ++ref) {
    // move the chosen reference to the front of a permuted copy
    std::vector<EquivalentStack> perm = stacks;
    std::rotate(perm.begin(), perm.begin() + static_cast<long>(ref), perm.end());
    // largest |b| among the three is stack 1 regardless of order
    const auto cands = solve_segment_sqrt(perm, 8000.0);
    auto pick = select_feasible_root(std::span<const SegmentCandidate>(cands),
                                     std::span<const EquivalentStack>(perm));
    std::rotate(pick.currents.rbegin(), pick.currents.rbegin() + static_cast<long>(ref),
                pick.currents.rend());
    picks.push_back(pick.currents);
  }
  // the cubic in each explicit reference branch
  for (std::size_t ref = 0; ref < 3; ++ref) {
    std::vector<double> g, h;
    CubicCoefficients c = segment_cubic(std::span<const EquivalentStack>(stacks), ref, &g, &h);
    c.c0 -= 8000.0;
    for (double x : distinct_real_roots(c)) {
      std::vector<double> cur(3);
      bool feasible = true;
      for (std::size_t j = 0; j < 3; ++j) {
        const double xj = g[j] * x + h[j];
        feasible = feasible && xj >= std::sqrt(stacks[j].i_lb) && xj <= std::sqrt(stacks[j].i_ub_eff);
        cur[j] = xj * xj;
      }
      if (feasible) picks.push_back(cur);
    }
  }
  ASSERT_EQ(picks.size(), 6u);
  for (const auto& p : picks) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(p[j], picks[0][j], 1e-8);
  }
}

TEST(SolveSegmentNumeric, MatchesCubicAtEightKilowatts) {
  const auto stacks = three();
  const auto cands = solve_segment_sqrt(stacks, 8000.0);
  const auto pick = select_feasible_root(std::span<const SegmentCandidate>(cands),
                                         std::span<const EquivalentStack>(stacks));
  const auto num = solve_segment_numeric(stacks, 8000.0, 27.548, 31.536);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(num[j], pick.currents[j], 1e-6);
}

TEST(SolveSegmentNumeric, BracketViolation) {
  const auto stacks = three();
  EXPECT_THROW(solve_segment_numeric(stacks, 8000.0, 40.0, 44.0), InconsistencyError);
}

// Both methods on every segment of random networks.
TEST(SolveSegmentProperty, CubicAgreesWithBisectionOnEverySegment) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int seed = 0; seed < 20; ++seed) {
    const Dispatcher d(testing::random_network(rng));
    const auto& pts = d.table().points;
    for (std::size_t k = 1; k < pts.size(); ++k) {
      const double lo = pts[k - 1].cumulative_power, hi = pts[k].cumulative_power;
      if (!(hi > lo)) continue;
      for (double frac : {0.1, 0.5, 0.9, u01(rng)}) {
        const double p = lo + frac * (hi - lo);
        const auto a = d.solve(p, SegmentMethod::Analytic);
        const auto n = d.solve(p, SegmentMethod::Numeric);
        ASSERT_EQ(a.status, DispatchStatus::Optimal);
        EXPECT_LE(std::abs(a.total_power - p), 1e-9 * std::max(1.0, p));
        EXPECT_LE(std::abs(n.total_power - p), 1e-9 * std::max(1.0, p));
        for (std::size_t j = 0; j < a.currents.size(); ++j) {
          EXPECT_NEAR(a.currents[j], n.currents[j], 1e-6) << "seed " << seed << " seg " << k;
        }
      }
    }
  }
}

}  // namespace
}  // namespace fcdispatch
