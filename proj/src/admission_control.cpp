#include "slicealloc/admission_control.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "slicealloc/errors.hpp"

namespace slicealloc {
namespace {

AllocationResult SolveOrThrow(const AllocationProblem& problem, const SolverOptions& options) {
  AllocationResult r = Solve(problem, options);
  if (!r.feasible) {
    std::string who;
    for (auto i : r.starved_users) who += (who.empty() ? "" : ", ") + std::to_string(problem.targets[i].user_id);
    throw InfeasibleError("no subchannel can be assigned to user(s) " + who);
  }
  return r;
}

// Ownership pattern of a solved allocation, -1 where nobody transmits.
std::vector<int> Owners(const AllocationResult& r) {
  std::vector<int> owner(static_cast<std::size_t>(r.assignment.cols()), -1);
  for (Eigen::Index j = 0; j < r.assignment.cols(); ++j) {
    for (Eigen::Index i = 0; i < r.assignment.rows(); ++i) {
      if (r.assignment(i, j) != 0) owner[static_cast<std::size_t>(j)] = static_cast<int>(i);
    }
  }
  return owner;
}

// Largest rescale of the rate unit in one secant step, either way.
constexpr double kMaxUnitGrowth = 50.0;

}  // namespace

StepRule StepRuleFromString(const std::string& s) {
  if (s == "fixed") return StepRule::kFixed;
  if (s == "secant") return StepRule::kSecant;
  throw std::invalid_argument("unknown step rule '" + s + "' (expected fixed or secant)");
}

std::string ToString(StepRule rule) { return rule == StepRule::kFixed ? "fixed" : "secant"; }

void PowerBudget::Validate() const {
  if (!(available_w > 0.0)) throw std::invalid_argument("power budget must be > 0 W");
  if (!(tolerance > 0.0)) throw std::invalid_argument("power budget tolerance must be > 0");
}

std::pair<AllocationResult, ReadjustmentReport> Readjust(AllocationProblem problem,
                                                         const std::vector<Eigen::Index>& cl_users,
                                                         const PowerBudget& budget,
                                                         const ReadjustOptions& options) {
  budget.Validate();
  if (!(options.rate_unit_bps > 0.0)) throw std::invalid_argument("readjust: rate unit must be > 0");
  const std::set<Eigen::Index> unique(cl_users.begin(), cl_users.end());
  for (auto i : unique) {
    if (i < 0 || i >= problem.users()) throw std::invalid_argument("readjust: CL user index out of range");
  }

  ReadjustmentReport report;
  report.cl_users.assign(unique.begin(), unique.end());
  for (auto i : report.cl_users) report.original_targets.push_back(problem.targets[i].target_rate_bps);

  // Intermediate solves only steer the loop; the local search runs once at the end.
  SolverOptions solver = options.solver;
  solver.polish_passes = 0;
  AllocationResult result = SolveOrThrow(problem, solver);
  double p_opt = result.total_power_w / budget.available_w;
  report.initial_p_opt = p_opt;
  report.power_history_w.push_back(result.total_power_w);

  std::set<Eigen::Index> reduced;
  double unit = options.rate_unit_bps;
  while (p_opt > 1.0 + budget.tolerance) {
    if (report.iterations >= options.max_iterations) {
      report.hit_iteration_cap = true;
      break;
    }
    const bool cl_exhausted = std::all_of(report.cl_users.begin(), report.cl_users.end(),
                                          [&](auto i) { return problem.targets[i].target_rate_bps <= 0.0; });
    const double lambda_sum = result.lambda.sum();
    if (cl_exhausted || !(lambda_sum > 0.0)) {
      throw InfeasibleError("URLLC/TS demand alone needs " + std::to_string(result.total_power_w) +
                            " W, budget is " + std::to_string(budget.available_w) + " W");
    }
    double cut = 0.0;
    for (auto i : report.cl_users) {
      auto& target = problem.targets[i].target_rate_bps;
      const double delta = (p_opt - 1.0) * (result.lambda(i) / lambda_sum) * unit;
      if (delta > 0.0 && target > 0.0) reduced.insert(i);
      const double next = std::max(target - delta, 0.0);
      cut += target - next;
      target = next;
    }
    report.unit_history_bps.push_back(unit);
    // Lower targets keep the previous pattern feasible, so seeding it keeps the power from rising.
    solver.warm_start = result.dual_lambda;
    solver.incumbent_owner = Owners(result);
    result = SolveOrThrow(problem, solver);
    const double p_prev = p_opt;
    p_opt = result.total_power_w / budget.available_w;

    if (options.step_rule == StepRule::kSecant && p_opt > 1.0 + budget.tolerance) {
      // ln p falls roughly linearly in the total cut. Aim the next step at the
      // middle of the tolerance band using the slope just observed.
      const double slope = cut > 0.0 ? (std::log(p_prev) - std::log(p_opt)) / cut : 0.0;
      double scaled = unit * kMaxUnitGrowth;
      if (slope > 0.0) {
        const double want = (std::log(p_opt) - std::log1p(budget.tolerance / 2.0)) / slope;
        double share = 0.0;
        for (auto i : report.cl_users) {
          if (problem.targets[i].target_rate_bps > 0.0) share += result.lambda(i);
        }
        share /= result.lambda.sum();
        if (share > 0.0) scaled = want / ((p_opt - 1.0) * share);
      }
      unit = std::clamp(scaled, unit / kMaxUnitGrowth, unit * kMaxUnitGrowth);
    }
    report.power_history_w.push_back(result.total_power_w);
    ++report.iterations;
  }

  if (options.solver.polish_passes > 0) {
    solver.polish_passes = options.solver.polish_passes;
    solver.warm_start = result.dual_lambda;
    solver.incumbent_owner = Owners(result);
    result = SolveOrThrow(problem, solver);
    p_opt = result.total_power_w / budget.available_w;
    report.power_history_w.back() = result.total_power_w;
  }
  report.final_p_opt = p_opt;
  for (auto i : report.cl_users) report.final_targets.push_back(problem.targets[i].target_rate_bps);
  report.reduced_users.assign(reduced.begin(), reduced.end());
  return {std::move(result), std::move(report)};
}

}  // namespace slicealloc
