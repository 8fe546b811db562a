#pragma once

// Reference computations that share no code path with the dual solver. They
// back the unit tests, the acceptance suite and `slicesim validate-oracle`.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "slicealloc/dual_allocator.hpp"

namespace slicealloc::oracle {

struct BruteForceResult {
  bool feasible = false;
  double total_power_w = 0.0;
  std::vector<int> owner;  // best ownership pattern
};

// Minimum power water-filling level for one user over a fixed set, found by
// bisection on the level. Returns the per-channel powers.
std::vector<double> BisectionWaterFill(double target_bps, std::span<const double> inverse_gains,
                                       double bandwidth_hz);

// Exhaustive search over all N^K subchannel ownership patterns.
BruteForceResult BruteForceAllocation(const AllocationProblem& problem);

// Dual function written directly from the price definition
// mu_ij = lambda B log2(1 + [lambda B/ln2 - s/h]^+ h/s) - [lambda B/ln2 - s/h]^+.
double LiteralDualValue(const Eigen::VectorXd& lambda, const AllocationProblem& problem);

// F(mu) = sum_i (mu_i - mu)^+ + mu.
double SubchannelPriceObjective(std::span<const double> bids, double mu);

// Largest grid point attaining the grid minimum of F over [min - 1, max + 1].
double GridArgminPrice(std::span<const double> bids, double step_fraction);

// Random small instance at Table-I scale: 180 kHz subchannels, -174 dBm/Hz noise,
// 3.7 GHz InF path loss with Rayleigh fading, targets of a few bits/s/Hz.
AllocationProblem RandomInstance(std::mt19937_64& gen, int users, int subchannels);

struct SuiteResult {
  std::string name;
  bool passed = true;
  int cases = 0;
  int failures = 0;
  double worst = 0.0;  // worst deviation in the suite's own unit
  std::string unit;
};

struct OracleOptions {
  int allocation_instances = 100;
  int price_sequences = 1000;
  int subgradient_points = 100;
  std::uint64_t mm1_packets = 4'000'000;
};

SuiteResult AllocationSuite(std::uint64_t seed, int instances);
SuiteResult SubchannelPriceSuite(std::uint64_t seed, int sequences);
SuiteResult SubgradientSuite(std::uint64_t seed, int points);
SuiteResult Mm1Suite(std::uint64_t seed, std::uint64_t packets);

std::vector<SuiteResult> RunAllSuites(std::uint64_t seed, const OracleOptions& options);

}  // namespace slicealloc::oracle
