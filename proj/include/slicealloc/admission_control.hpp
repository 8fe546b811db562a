#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "slicealloc/dual_allocator.hpp"

namespace slicealloc {

struct PowerBudget {
  double available_w = 0.0;
  double tolerance = 0.01;  // stop once p_required / p_available <= 1 + tolerance

  void Validate() const;
};

enum class StepRule {
  kFixed,   // every step uses rate_unit_bps
  kSecant,  // the unit is rescaled from the observed power drop per unit of rate cut
};

StepRule StepRuleFromString(const std::string& s);
std::string ToString(StepRule rule);

struct ReadjustOptions {
  // Rate unit in which the reduction (p_opt - 1) * lambda_i / sum(lambda) is expressed.
  double rate_unit_bps = 1e6;
  StepRule step_rule = StepRule::kSecant;
  std::size_t max_iterations = 200;
  SolverOptions solver;
};

struct ReadjustmentReport {
  std::size_t iterations = 0;
  std::vector<Eigen::Index> cl_users;        // indices into the problem's users
  std::vector<double> original_targets;      // aligned with cl_users, bps
  std::vector<double> final_targets;
  std::vector<double> power_history_w;       // required power after each solve
  std::vector<double> unit_history_bps;      // rate unit used by each step
  double initial_p_opt = 0.0;
  double final_p_opt = 0.0;
  std::vector<Eigen::Index> reduced_users;
  bool hit_iteration_cap = false;

  bool success(const PowerBudget& budget) const { return final_p_opt <= 1.0 + budget.tolerance; }
};

// Lowers CL targets in proportion to their multipliers until the allocation
// fits the budget. URLLC/TS targets are left untouched. Throws InfeasibleError
// if all CL targets reach zero while the power still exceeds the budget, or if
// an intermediate solve leaves a user without a subchannel.
std::pair<AllocationResult, ReadjustmentReport> Readjust(AllocationProblem problem,
                                                         const std::vector<Eigen::Index>& cl_users,
                                                         const PowerBudget& budget,
                                                         const ReadjustOptions& options = {});

}  // namespace slicealloc
