#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "fcdispatch/dispatch.hpp"
#include "test_support.hpp"

namespace fcdispatch {
namespace {

TEST(Dispatch, ThreeStackAtEightKilowatts) {
  const auto r = dispatch(testing::three_stack_network(), 8000.0);
  ASSERT_EQ(r.status, DispatchStatus::Optimal);
  EXPECT_NEAR(r.total_current, 234.32, 0.05);
  EXPECT_NEAR(r.currents[0], 81.02, 0.01);
  EXPECT_NEAR(r.currents[1], 136.23, 0.01);
  EXPECT_NEAR(r.currents[2], 17.07, 0.01);
  EXPECT_NEAR(r.mu, 30.143, 1e-3);
  EXPECT_LE(std::abs(r.total_power - 8000.0), 1e-9 * 8000.0);
}

TEST(Dispatch, ThirtyStackTotal) {
  const Dispatcher d(testing::thirty_stack_network());
  const auto r = d.solve(75000.0);
  ASSERT_EQ(r.status, DispatchStatus::Optimal);
  EXPECT_NEAR(r.total_current, 828.88, 0.1);
  EXPECT_LE(std::abs(r.total_power - 75000.0), 1e-9 * 75000.0);
  // branches pinned at the 0.1 A floor
  for (std::size_t j : {1u, 7u, 14u}) EXPECT_DOUBLE_EQ(r.currents[j], 0.1);
  EXPECT_NEAR(r.currents[10], 90.07, 0.05);
}

TEST(Dispatch, MinimumDemandPinsLowerBounds) {
  const Dispatcher d(testing::three_stack_network());
  const auto r = d.solve(d.table().p_min);
  ASSERT_EQ(r.status, DispatchStatus::Optimal);
  EXPECT_EQ(r.currents, (std::vector<double>{2.103, 0.0, 6.646}));
  EXPECT_TRUE(r.sets.interior.empty());
}

TEST(Dispatch, MaximumDemandReachesUpperBounds) {
  const Dispatcher d(testing::three_stack_network());
  const auto r = d.solve(d.table().p_max);
  ASSERT_EQ(r.status, DispatchStatus::Optimal);
  EXPECT_NEAR(r.currents[0], 106.8127, 1e-9);
  EXPECT_NEAR(r.currents[1], 325.6562, 1e-9);
  EXPECT_NEAR(r.currents[2], 236.4155, 1e-6);

  // unbounded branches top out at their power peak (a double root of the cubic)
  const Dispatcher big(testing::thirty_stack_network());
  const auto top = big.solve(big.table().p_max);
  ASSERT_EQ(top.status, DispatchStatus::Optimal);
  for (std::size_t j = 0; j < top.currents.size(); ++j) {
    EXPECT_NEAR(top.currents[j], big.stacks()[j].i_ub_eff, 1e-6 * big.stacks()[j].i_ub_eff);
  }
}

TEST(Dispatch, InfeasibleDemands) {
  const Dispatcher d(testing::three_stack_network());
  const auto low = d.solve(100.0);
  EXPECT_EQ(low.status, DispatchStatus::InfeasibleLow);
  EXPECT_NEAR(low.p_min, 310.976, 1e-2);
  EXPECT_NEAR(low.p_max, 19206.708, 1e-3);
  EXPECT_TRUE(low.currents.empty());
  EXPECT_EQ(d.solve(25000.0).status, DispatchStatus::InfeasibleHigh);
  EXPECT_EQ(d.solve(std::nan("")).status, DispatchStatus::InfeasibleHigh);
}

struct QuadraticStack {
  double a = 0.0, c = 1.0, i_lb = 0.0, i_ub_eff = 1.0;  // P = a I - c I^2
};
double power(const QuadraticStack& s, double i) { return s.a * i - s.c * i * i; }
double marginal_power(const QuadraticStack& s, double i) { return s.a - 2.0 * s.c * i; }
double inverse_marginal(const QuadraticStack& s, double mu) {
  return std::clamp((s.a - mu) / (2.0 * s.c), s.i_lb, s.i_ub_eff);
}
static_assert(ConcavePowerModel<QuadraticStack>);

TEST(Dispatch, GenericConcaveModel) {
  // equal marginals: a1 - 2 c1 I1 = a2 - 2 c2 I2 gives a closed form to check
  const std::vector<QuadraticStack> net{{10.0, 0.5, 0.0, 10.0}, {8.0, 0.25, 0.0, 16.0}};
  const DispatchTable t = build_table(net);
  const double p = 50.0;
  const auto r = dispatch(t, net, p);
  ASSERT_EQ(r.status, DispatchStatus::Optimal);
  EXPECT_NEAR(r.total_power, p, 1e-9 * p);
  EXPECT_NEAR(marginal_power(net[0], r.currents[0]), marginal_power(net[1], r.currents[1]),
              1e-9);
}

TEST(DispatchProperty, MonotoneDispatchCurve) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Dispatcher d(testing::random_network(rng));
    const auto& t = d.table();
    DispatchResult prev = d.solve(t.p_min);
    for (int k = 1; k <= 200; ++k) {
      const double p = k == 200 ? t.p_max : t.p_min + (t.p_max - t.p_min) * k / 200.0;
      const DispatchResult cur = d.solve(p);
      ASSERT_EQ(cur.status, DispatchStatus::Optimal);
      for (std::size_t j = 0; j < cur.currents.size(); ++j) {
        EXPECT_GE(cur.currents[j], prev.currents[j] - 1e-9 * std::max(1.0, prev.currents[j]));
      }
      EXPECT_GT(cur.total_current, prev.total_current);
      prev = cur;
    }
  }
}

TEST(DispatchProperty, PowerConstraintActive) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Dispatcher d(testing::random_network(rng));
    const double p = d.table().p_min + u01(rng) * (d.table().p_max - d.table().p_min);
    const auto r = d.solve(p);
    ASSERT_EQ(r.status, DispatchStatus::Optimal);
    EXPECT_LE(std::abs(r.total_power - p), 1e-9 * std::max(1.0, p));
    for (std::size_t j = 0; j < r.currents.size(); ++j) {
      EXPECT_GE(r.currents[j], d.stacks()[j].i_lb);
      EXPECT_LE(r.currents[j], d.stacks()[j].i_ub_eff);
    }
  }
}

TEST(DispatchProperty, ReductionCommutes) {
  std::mt19937_64 rng(6);
  testing::RandomNetworkOptions opt;
  opt.max_stacks_per_branch = 3;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const Network net = testing::random_network(rng, opt);
    // rebuild the network from its reduced stacks, one stack of phi = 1 each
    Network flat;
    for (const auto& br : net.branches) {
      const EquivalentStack eq = reduce_branch(br);
      flat.branches.push_back({{{eq.a_eq, eq.b_eq, 1.0}}, br.i_lb, br.i_ub});
    }
    const Dispatcher dn(net), df(flat);
    const double p = dn.table().p_min + u01(rng) * (dn.table().p_max - dn.table().p_min);
    const auto rn = dn.solve(p), rf = df.solve(p);
    ASSERT_EQ(rn.status, DispatchStatus::Optimal);
    EXPECT_EQ(rn.currents, rf.currents);
  }
}

TEST(DispatchProperty, IncrementalRule) {
  // between consecutive observable points only interior branches move
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Dispatcher d(testing::random_network(rng));
    const auto& pts = d.table().points;
    for (std::size_t k = 1; k < pts.size(); ++k) {
      const double lo = pts[k - 1].cumulative_power, hi = pts[k].cumulative_power;
      if (!(hi > lo)) continue;
      const auto first = d.solve(lo + 0.01 * (hi - lo));
      for (int s = 1; s <= 20; ++s) {
        const auto r = d.solve(lo + (0.01 + 0.98 * s / 20.0) * (hi - lo));
        EXPECT_EQ(r.sets.interior, first.sets.interior);
        for (std::size_t j : first.sets.at_lb) EXPECT_EQ(r.currents[j], first.currents[j]);
        for (std::size_t j : first.sets.at_ub) EXPECT_EQ(r.currents[j], first.currents[j]);
        for (std::size_t j : first.sets.interior) EXPECT_GT(r.currents[j], first.currents[j]);
      }
    }
  }
}

TEST(DispatchProperty, TableSharedAcrossThreads) {
  const Dispatcher d(testing::thirty_stack_network());
  std::vector<double> serial, parallel(8);
  for (int k = 0; k < 8; ++k) serial.push_back(d.solve(10000.0 * (k + 1)).total_current);
  std::vector<std::thread> pool;
  for (int k = 0; k < 8; ++k) {
    pool.emplace_back([&, k] { parallel[k] = d.solve(10000.0 * (k + 1)).total_current; });
  }
  for (auto& th : pool) th.join();
  EXPECT_EQ(serial, parallel);
}

}  // namespace
}  // namespace fcdispatch
