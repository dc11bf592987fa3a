#pragma once

// Square-root V-I stack model: f(I) = a + b*sqrt(I), branch power
// P(I) = phi * f(I) * I. Multi-stack series branches collapse to one
// equivalent stack with phi folded into the coefficients.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fcdispatch {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SqrtStackParams {
  double a = 0.0;    // V
  double b = -1.0;   // V / sqrt(A)
  double phi = 1.0;  // efficiency
};

struct BranchSpec {
  std::vector<SqrtStackParams> stacks;
  double i_lb = 0.0;
  double i_ub = kUnbounded;
};

struct Network {
  std::vector<BranchSpec> branches;
};

/// One branch after reduction. `i_ub_eff` never exceeds the current at which
/// branch power peaks, so power is nondecreasing on [i_lb, i_ub_eff].
struct EquivalentStack {
  double a_eq = 0.0;
  double b_eq = -1.0;
  double i_lb = 0.0;
  double i_ub = kUnbounded;
  double i_ub_eff = kUnbounded;
};

/// Anything the table and bisection machinery can dispatch: a strictly
/// concave, nondecreasing power curve on [i_lb, i_ub_eff] with an invertible
/// marginal.
template <class Model>
concept ConcavePowerModel = requires(const Model& m, double x) {
  { power(m, x) } -> std::convertible_to<double>;
  { marginal_power(m, x) } -> std::convertible_to<double>;
  { inverse_marginal(m, x) } -> std::convertible_to<double>;
  { m.i_lb } -> std::convertible_to<double>;
  { m.i_ub_eff } -> std::convertible_to<double>;
};

namespace detail {

inline void require_nonnegative_current(double i, const char* what) {
  if (!(i >= 0.0)) {
    throw std::domain_error(std::string(what) + ": current must be >= 0, got " +
                            std::to_string(i));
  }
}

}  // namespace detail

inline double power(const EquivalentStack& s, double i) {
  detail::require_nonnegative_current(i, "power");
  return (s.a_eq + s.b_eq * std::sqrt(i)) * i;
}

inline double marginal_power(const EquivalentStack& s, double i) {
  detail::require_nonnegative_current(i, "marginal_power");
  return s.a_eq + 1.5 * s.b_eq * std::sqrt(i);
}

/// Current at which the marginal power equals `mu`, clamped to the branch's
/// operating window. Nonincreasing in `mu`.
inline double inverse_marginal(const EquivalentStack& s, double mu) {
  double x = (mu - s.a_eq) / (1.5 * s.b_eq);
  if (!(x > 0.0)) x = 0.0;
  double i = x * x;
  if (i < s.i_lb) return s.i_lb;
  if (i > s.i_ub_eff) return s.i_ub_eff;
  return i;
}

/// Stationary point of a*I + b*I^1.5, where the marginal crosses zero.
inline double power_peak_current(double a_eq, double b_eq) {
  double x = 2.0 * a_eq / (3.0 * -b_eq);
  return x * x;
}

inline double effective_upper_bound(double a_eq, double b_eq, double i_ub) {
  double peak = power_peak_current(a_eq, b_eq);
  return i_ub < peak ? i_ub : peak;
}

namespace detail {

inline std::string where(std::size_t branch) {
  return "branch " + std::to_string(branch + 1);
}

inline std::string where(std::size_t branch, std::size_t stack) {
  return where(branch) + ", stack " + std::to_string(stack + 1);
}

inline void check_stack(const SqrtStackParams& p, const std::string& loc) {
  if (!std::isfinite(p.a) || p.a < 0.0) {
    throw ValidationError(loc + ": a must be finite and >= 0, got " + std::to_string(p.a));
  }
  if (!std::isfinite(p.b) || !(p.b < 0.0)) {
    throw ValidationError(loc + ": b must be finite and < 0, got " + std::to_string(p.b));
  }
  if (!(p.phi > 0.0 && p.phi <= 1.0)) {
    throw ValidationError(loc + ": phi must lie in (0, 1], got " + std::to_string(p.phi));
  }
}

inline void check_branch(const BranchSpec& br, std::size_t index) {
  if (br.stacks.empty()) throw ValidationError(where(index) + ": no stacks");
  for (std::size_t j = 0; j < br.stacks.size(); ++j) check_stack(br.stacks[j], where(index, j));
  if (!std::isfinite(br.i_lb) || br.i_lb < 0.0) {
    throw ValidationError(where(index) + ": i_lb must be finite and >= 0, got " +
                          std::to_string(br.i_lb));
  }
  if (std::isnan(br.i_ub) || br.i_ub < 0.0) {
    throw ValidationError(where(index) + ": i_ub must be >= 0, got " + std::to_string(br.i_ub));
  }
  if (br.i_lb > br.i_ub) {
    throw ValidationError(where(index) + ": i_lb (" + std::to_string(br.i_lb) +
                          ") exceeds i_ub (" + std::to_string(br.i_ub) + ")");
  }
}

inline EquivalentStack reduce_checked(const BranchSpec& br, std::size_t index) {
  EquivalentStack eq;
  eq.a_eq = 0.0;
  eq.b_eq = 0.0;
  for (const auto& s : br.stacks) {
    eq.a_eq += s.phi * s.a;
    eq.b_eq += s.phi * s.b;
  }
  eq.i_lb = br.i_lb;
  eq.i_ub = br.i_ub;
  eq.i_ub_eff = effective_upper_bound(eq.a_eq, eq.b_eq, br.i_ub);
  if (eq.i_ub_eff < eq.i_lb) {
    throw ValidationError(where(index) + ": i_lb (" + std::to_string(br.i_lb) +
                          ") lies past the power peak at " + std::to_string(eq.i_ub_eff) +
                          " A");
  }
  return eq;
}

}  // namespace detail

/// Collapses a series branch into one stack: a_eq = sum(phi*a),
/// b_eq = sum(phi*b). Series stacks share the branch current, so branch power
/// is preserved exactly.
inline EquivalentStack reduce_branch(const BranchSpec& branch) {
  detail::check_branch(branch, 0);
  return detail::reduce_checked(branch, 0);
}

/// Throws ValidationError naming the first offending branch/stack.
inline const Network& validate(const Network& net) {
  if (net.branches.empty()) throw ValidationError("network has no branches");
  for (std::size_t i = 0; i < net.branches.size(); ++i) {
    detail::check_branch(net.branches[i], i);
    detail::reduce_checked(net.branches[i], i);
  }
  return net;
}

inline std::vector<EquivalentStack> reduce_network(const Network& net) {
  validate(net);
  std::vector<EquivalentStack> out;
  out.reserve(net.branches.size());
  for (std::size_t i = 0; i < net.branches.size(); ++i) {
    out.push_back(detail::reduce_checked(net.branches[i], i));
  }
  return out;
}

/// Builds a branch from per-stack bounds. Series stacks carry one current, so
/// the branch window is the intersection of the stack windows.
inline BranchSpec branch_from_stack_bounds(std::vector<SqrtStackParams> stacks,
                                           std::span<const double> stack_lbs,
                                           std::span<const double> stack_ubs) {
  if (stack_lbs.size() != stacks.size() || stack_ubs.size() != stacks.size()) {
    throw ValidationError("per-stack bounds must match the stack count");
  }
  BranchSpec br;
  br.stacks = std::move(stacks);
  br.i_lb = 0.0;
  br.i_ub = kUnbounded;
  for (std::size_t j = 0; j < stack_lbs.size(); ++j) {
    br.i_lb = std::max(br.i_lb, stack_lbs[j]);
    br.i_ub = std::min(br.i_ub, stack_ubs[j]);
  }
  return br;
}

}  // namespace fcdispatch
