// fcdispatch: plan, solve, sweep and cross-check minimum-current dispatch for
// a parallel network of fuel-cell stacks.
//
// Exit codes: 0 ok, 2 config/argument error, 3 infeasible demand,
// 4 oracle mismatch.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fcdispatch/dispatch.hpp"
#include "fcdispatch/kkt.hpp"
#include "fcdispatch/netconfig.hpp"
#include "fcdispatch/reference_solver.hpp"

namespace {

using namespace fcdispatch;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitMismatch = 4;

constexpr double kValidateTolerance = 1e-3;  // A per branch
constexpr std::size_t kValidateGridPoints = 200;

struct ConfigFailure {
  std::string message;
};

Network load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigFailure{"cannot open config '" + path + "'"};
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_network(ss.str());
  } catch (const std::invalid_argument& e) {
    throw ConfigFailure{path + ": " + e.what()};
  }
}

void emit(const std::string& text, const std::string& output) {
  if (output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(output, std::ios::binary);
  if (!out) throw ConfigFailure{"cannot write output '" + output + "'"};
  out << text;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

int cmd_plan(const std::string& config, const std::string& output) {
  const Dispatcher d(load_network(config));
  const DispatchTable& t = d.table();
  const std::size_t n = d.stacks().size();
  std::string text = "index,mu,branch,kind,cumulative_power";
  for (std::size_t j = 1; j <= n; ++j) text += ",i_" + std::to_string(j);
  text += '\n';
  for (std::size_t k = 0; k < t.points.size(); ++k) {
    const ObservablePoint& p = t.points[k];
    text += std::to_string(k + 1) + ',' + format_exact(p.mu) + ',' +
            std::to_string(p.branch_index + 1) + ',' +
            (p.kind == BoundKind::LowerBound ? "lb" : "ub") + ',' +
            format_exact(p.cumulative_power);
    for (double i : p.snapshot_currents) text += ',' + format_exact(i);
    text += '\n';
  }
  emit(text, output);
  return kExitOk;
}

int report_infeasible(const DispatchResult& r) {
  std::cerr << kInfeasibleMessage << ": " << fixed(r.p_req, 3) << " W is outside the feasible range ["
            << fixed(r.p_min, 3) << ", " << fixed(r.p_max, 3) << "] W\n";
  return kExitInfeasible;
}

int cmd_solve(const std::string& config, double p_req, const std::string& output) {
  const Dispatcher d(load_network(config));
  const DispatchResult r = d.solve(p_req);
  emit(serialize_result(r), output);
  return r.status == DispatchStatus::Optimal ? kExitOk : report_infeasible(r);
}

int cmd_sweep(const std::string& config, double from, double to, std::size_t points,
              const std::string& output) {
  if (points < 2 || !(from <= to)) {
    throw ConfigFailure{"sweep needs --from <= --to and --points >= 2"};
  }
  const Dispatcher d(load_network(config));
  std::vector<DispatchResult> rows;
  for (double p : sweep_demands(from, to, points)) rows.push_back(d.solve(p));
  emit(serialize_sweep(rows, d.stacks().size()), output);
  return kExitOk;
}

template <class F>
double time_us(F&& f, int repeats) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < repeats; ++k) f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::micro>(t1 - t0).count() / repeats;
}

int cmd_validate(const std::string& config, double p_req, double perturb,
                 const std::string& output) {
  const Dispatcher d(load_network(config));
  const auto& stacks = d.stacks();
  DispatchResult r = d.solve(p_req);
  if (r.status != DispatchStatus::Optimal) return report_infeasible(r);
  if (perturb != 0.0) {
    r.currents[0] += perturb;
    r.total_current += perturb;
  }
  const OracleResult lam = lambda_bisection(stacks, p_req);
  const Comparison cmp = compare(r, lam, kValidateTolerance);
  const KktReport kkt = verify_kkt(r, stacks);

  const bool with_grid = stacks.size() <= kGridMaxBranches;
  OracleResult grid;
  if (with_grid) grid = grid_bruteforce(stacks, p_req, kValidateGridPoints);

  const int repeats = 200;
  const double t_dispatch = time_us([&] { (void)d.solve(p_req); }, repeats);
  const double t_lambda = time_us([&] { (void)lambda_bisection(stacks, p_req); }, repeats);

  std::ostringstream os;
  os << "p_req " << fixed(p_req, 3) << " W\n";
  os << "branch  dispatch_A  lambda_bisection_A  delta_A";
  if (with_grid) os << "  grid_A";
  os << '\n';
  for (std::size_t j = 0; j < stacks.size(); ++j) {
    os << j + 1 << "  " << fixed(r.currents[j]) << "  " << fixed(lam.currents[j]) << "  "
       << fixed(cmp.current_deltas[j], 9);
    if (with_grid) os << "  " << fixed(grid.currents[j]);
    os << '\n';
  }
  os << "total_current  " << fixed(r.total_current) << "  " << fixed(lam.total_current) << "  "
     << fixed(cmp.total_delta, 9);
  if (with_grid) os << "  " << fixed(grid.total_current);
  os << '\n';
  os << "total_power  " << fixed(r.total_power, 3) << "  " << fixed(lam.total_power, 3) << '\n';
  os << "kkt  residual " << kkt.max_equal_marginal_residual << "  chain "
     << (kkt.chain_ok ? "ok" : "violated") << "  power_residual " << kkt.power_residual << '\n';
  os << "time_us  dispatch " << fixed(t_dispatch, 2) << "  lambda_bisection " << fixed(t_lambda, 2)
     << '\n';
  os << "result " << (cmp.pass ? "PASS" : "FAIL") << " (max delta " << cmp.max_abs_delta
     << " A, tolerance " << kValidateTolerance << " A)\n";
  emit(os.str(), output);
  return cmp.pass ? kExitOk : kExitMismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-current power dispatch for parallel fuel-cell networks"};
  app.require_subcommand(1);

  std::string config, output;
  double power = 0.0, from = 0.0, to = 0.0, perturb = 0.0;
  std::size_t points = 0;

  auto* plan = app.add_subcommand("plan", "List the observable points of a network");
  plan->add_option("config", config, "Network JSON")->required();
  plan->add_option("--output", output, "Write to file instead of stdout");

  auto* solve = app.add_subcommand("solve", "Dispatch one power demand (JSON output)");
  solve->add_option("config", config, "Network JSON")->required();
  solve->add_option("--power", power, "Demand in W")->required();
  solve->add_option("--output", output, "Write to file instead of stdout");

  auto* sweep = app.add_subcommand("sweep", "Dispatch evenly spaced demands (CSV output)");
  sweep->add_option("config", config, "Network JSON")->required();
  sweep->add_option("--from", from, "First demand in W")->required();
  sweep->add_option("--to", to, "Last demand in W")->required();
  sweep->add_option("--points", points, "Number of demands (>= 2)")->required();
  sweep->add_option("--output", output, "Write to file instead of stdout");

  auto* validate_cmd =
      app.add_subcommand("validate", "Cross-check dispatch against the reference solvers");
  validate_cmd->add_option("config", config, "Network JSON")->required();
  validate_cmd->add_option("--power", power, "Demand in W")->required();
  validate_cmd->add_option("--output", output, "Write to file instead of stdout");
  // Test hook: shifts branch 1's dispatched current before comparison.
  validate_cmd->add_option("--perturb", perturb)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*plan) return cmd_plan(config, output);
    if (*solve) return cmd_solve(config, power, output);
    if (*sweep) return cmd_sweep(config, from, to, points, output);
    if (*validate_cmd) return cmd_validate(config, power, perturb, output);
  } catch (const ConfigFailure& e) {
    std::cerr << "error: " << e.message << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
