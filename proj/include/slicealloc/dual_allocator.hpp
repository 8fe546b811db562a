#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "slicealloc/channel_model.hpp"
#include "slicealloc/qos_translation.hpp"

namespace slicealloc {

// Gains below this are treated as zero when deciding who may own a subchannel.
inline constexpr double kMinUsableGain = 1e-30;

// Per-slot power minimisation: min sum p_ij s.t. r_i >= r_o,i, one owner per subchannel.
struct AllocationProblem {
  ChannelState channel;
  std::vector<UserQoS> targets;
  std::vector<double> beta;  // SNR gap per user; empty means 1 for everyone

  void Validate() const;
  double Beta(Eigen::Index user) const;
  Eigen::Index users() const { return static_cast<Eigen::Index>(targets.size()); }
};

struct SubchannelAssignment {
  std::vector<int> owner;                          // -1 when nobody bids
  std::vector<std::vector<Eigen::Index>> sets;     // J_i, ascending
};

struct SolverOptions {
  // Stop when sqrt(g' D g) <= rel_tolerance * (best dual value).
  double rel_tolerance = 1e-6;
  // Stop when (best primal - best dual) <= gap_tolerance * best primal.
  double gap_tolerance = 1e-6;
  // 0 selects 50 * N^2.
  std::size_t max_iterations = 0;
  // Move/swap passes over the recovered ownership; 0 disables the local search.
  int polish_passes = 4;
  // Centre hint for the initial ellipsoid, one entry per user; NaN entries fall
  // back to the middle of the enclosing box.
  std::optional<Eigen::VectorXd> warm_start;
  // Known ownership pattern (owner per subchannel, -1 for none) entered as a
  // primal candidate, so the result is never worse than this pattern.
  std::optional<std::vector<int>> incumbent_owner;
};

struct AllocationResult {
  Eigen::MatrixXd power;       // p_ij in W
  Eigen::MatrixXi assignment;  // x_ij in {0, 1}
  Eigen::VectorXd lambda;      // multipliers consistent with the returned powers
  Eigen::VectorXd dual_lambda; // best point found by the ellipsoid search
  Eigen::VectorXd rates;       // achieved r_i in bps
  double total_power_w = 0.0;
  double dual_value = 0.0;
  double duality_gap = 0.0;
  bool converged = false;
  bool feasible = true;
  std::vector<Eigen::Index> starved_users;
  std::size_t iterations = 0;
};

// Water-filling of one user over a fixed subchannel set.
struct WaterFillResult {
  double level_w = 0.0;   // lambda * B / ln 2
  double lambda = 0.0;
  std::vector<double> power;  // aligned with the input inverse gains
};

// Shannon rate of one user. Subchannels with x_ij = 0 contribute nothing.
double Rate(const ChannelState& channel, Eigen::Index user, double beta, std::span<const double> power_row,
            std::span<const int> assign_row);

// Water-filling powers [lambda B / ln2 - sigma^2 / (beta h)]^+ masked by the assignment.
Eigen::VectorXd PowerForLambda(double lambda, const ChannelState& channel, Eigen::Index user,
                               std::span<const int> assign_row, double beta = 1.0);

// Dual price of a subchannel for one user at multiplier lambda.
double MuValue(double lambda, double h_over_sigma2, double bandwidth_hz);

// Each subchannel goes to the highest bidder; ties go to the lowest user index.
SubchannelAssignment AssignSubchannels(const Eigen::VectorXd& lambda, const AllocationProblem& problem);

double DualValue(const Eigen::VectorXd& lambda, const AllocationProblem& problem);

Eigen::VectorXd Subgradient(const Eigen::VectorXd& lambda, const AllocationProblem& problem,
                            const SubchannelAssignment& assignment);

// Loose a priori bound on the optimal multiplier using every subchannel.
// `inverse_gains` holds sigma^2 / (beta h_ij). May return +inf on overflow.
double LambdaUpperBound(double target_bps, std::span<const double> inverse_gains, double bandwidth_hz);

// Stationary multiplier for a fixed subchannel set, assuming every channel is active.
double ClosedFormLambda(double target_bps, std::span<const double> inverse_gains, double bandwidth_hz);

// Exact water-filling that drops channels lying above the water level.
WaterFillResult WaterFill(double target_bps, std::span<const double> inverse_gains, double bandwidth_hz);

// Per-user upper bounds on an optimal multiplier used to size the initial ellipsoid.
// Zero-target users get 0.
Eigen::VectorXd LambdaEnclosingBounds(const AllocationProblem& problem);

AllocationResult Solve(const AllocationProblem& problem, const SolverOptions& options = {});

// Minimiser of F(mu) = sum_i (mu_i - mu)^+ + mu, i.e. the optimal subchannel price.
double OptimalSubchannelPrice(std::span<const double> bids);

}  // namespace slicealloc
