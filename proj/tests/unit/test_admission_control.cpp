#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "slicealloc/admission_control.hpp"
#include "slicealloc/errors.hpp"
#include "slicealloc/oracle.hpp"

using namespace slicealloc;
using Eigen::MatrixXd;

namespace {

// Four users on eight subchannels: users 0 and 1 are CL, 2 is URLLC, 3 is TS.
AllocationProblem Mixed(std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  AllocationProblem p = oracle::RandomInstance(gen, 4, 8);
  const double rates[] = {3e6, 2e6, 2.001e6, 1.64e6};
  const char* slices[] = {"cl", "cl", "urllc", "ts"};
  for (std::size_t i = 0; i < 4; ++i) {
    p.targets[i].target_rate_bps = rates[i];
    p.targets[i].slice_id = slices[i];
  }
  return p;
}

}  // namespace

TEST_CASE("under budget needs no readjustment") {
  const AllocationProblem p = Mixed(1);
  const double need = Solve(p).total_power_w;
  const auto [result, report] = Readjust(p, {0, 1}, {need * 10.0, 0.01});
  CHECK(report.iterations == 0);
  CHECK(report.final_targets == report.original_targets);
  CHECK(report.reduced_users.empty());
  CHECK(report.success({need * 10.0, 0.01}));
}

TEST_CASE("first fixed step follows the multiplier share") {
  const AllocationProblem p = Mixed(2);
  const AllocationResult base = Solve(p);
  const PowerBudget budget{base.total_power_w / 3.0, 0.01};
  ReadjustOptions options;
  options.step_rule = StepRule::kFixed;
  options.max_iterations = 1;
  options.solver.polish_passes = 0;
  const auto [result, report] = Readjust(p, {0}, budget, options);
  REQUIRE(report.iterations == 1);
  // The loop's own first solve runs without local search, so recompute its multipliers the same way.
  SolverOptions plain;
  plain.polish_passes = 0;
  const AllocationResult first = Solve(p, plain);
  const double p_opt = first.total_power_w / budget.available_w;
  const double expect = (p_opt - 1.0) * first.lambda(0) / first.lambda.sum() * 1e6;
  CHECK(report.original_targets[0] - report.final_targets[0] == doctest::Approx(std::min(expect, 3e6)));
}

TEST_CASE("readjustment fits the budget and leaves other slices alone") {
  for (std::uint64_t seed = 3; seed < 9; ++seed) {
    const AllocationProblem p = Mixed(seed);
    const AllocationResult base = Solve(p);
    const PowerBudget budget{base.total_power_w / 4.0, 0.01};
    for (StepRule rule : {StepRule::kFixed, StepRule::kSecant}) {
      ReadjustOptions options;
      options.step_rule = rule;
      options.rate_unit_bps = 1e5;
      options.max_iterations = 2000;
      try {
        const auto [result, report] = Readjust(p, {0, 1}, budget, options);
        CHECK_FALSE(report.hit_iteration_cap);
        CHECK(report.success(budget));
        CHECK(result.total_power_w <= budget.available_w * 1.01 * (1.0 + 1e-12));
        for (std::size_t n = 0; n < report.cl_users.size(); ++n) {
          CHECK(report.final_targets[n] <= report.original_targets[n]);
        }
        CHECK(result.rates(2) >= 2.001e6 * (1.0 - 1e-6));
        CHECK(result.rates(3) >= 1.64e6 * (1.0 - 1e-6));
        // Intermediate solves run without local search, so allow the final polished re-solve only to go down.
        for (std::size_t n = 1; n < report.power_history_w.size(); ++n) {
          CHECK(report.power_history_w[n] <= report.power_history_w[n - 1] * (1.0 + 1e-6));
        }
      } catch (const InfeasibleError&) {
        // URLLC and TS alone can exceed a quarter of the original power; then the error is the contract.
        AllocationProblem rest = p;
        rest.targets[0].target_rate_bps = 0.0;
        rest.targets[1].target_rate_bps = 0.0;
        CHECK(Solve(rest).total_power_w > budget.available_w * 1.01);
      }
    }
  }
}

TEST_CASE("larger multipliers take larger cuts") {
  int checked = 0;
  for (std::uint64_t seed = 10; seed < 30; ++seed) {
    const AllocationProblem p = Mixed(seed);
    SolverOptions plain;
    plain.polish_passes = 0;
    const AllocationResult first = Solve(p, plain);
    if (first.lambda(0) == first.lambda(1)) continue;
    ReadjustOptions options;
    options.step_rule = StepRule::kFixed;
    options.max_iterations = 1;
    options.solver.polish_passes = 0;
    const PowerBudget budget{first.total_power_w / 1.5, 0.01};
    const auto [result, report] = Readjust(p, {0, 1}, budget, options);
    const double cut0 = report.original_targets[0] - report.final_targets[0];
    const double cut1 = report.original_targets[1] - report.final_targets[1];
    CHECK((first.lambda(0) > first.lambda(1)) == (cut0 > cut1));
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("infeasible when non-CL demand alone exceeds the budget") {
  const AllocationProblem p = Mixed(4);
  AllocationProblem rest = p;
  rest.targets[0].target_rate_bps = 0.0;
  rest.targets[1].target_rate_bps = 0.0;
  const double floor = Solve(rest).total_power_w;
  CHECK_THROWS_AS(Readjust(p, {0, 1}, {floor / 2.0, 0.01}), InfeasibleError);
}

TEST_CASE("argument checks") {
  const AllocationProblem p = Mixed(5);
  CHECK_THROWS_AS(Readjust(p, {9}, {1.0, 0.01}), std::invalid_argument);
  CHECK_THROWS_AS(Readjust(p, {0}, {0.0, 0.01}), std::invalid_argument);
  CHECK_THROWS_AS(Readjust(p, {0}, {1.0, 0.0}), std::invalid_argument);
  CHECK(StepRuleFromString("fixed") == StepRule::kFixed);
  CHECK(ToString(StepRule::kSecant) == "secant");
  CHECK_THROWS_AS(StepRuleFromString("newton"), std::invalid_argument);
}
