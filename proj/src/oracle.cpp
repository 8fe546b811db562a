#include "slicealloc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "slicealloc/channel_model.hpp"
#include "slicealloc/qos_translation.hpp"
#include "slicealloc/units.hpp"

namespace slicealloc::oracle {
namespace {

using Eigen::Index;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

double InverseGain(const AllocationProblem& p, Index i, Index j) {
  const double h = p.channel.gains(i, j);
  if (h < kMinUsableGain) return kInf;
  return p.channel.noise_power_w / (p.Beta(i) * h);
}

double RateAtLevel(double level, std::span<const double> inv, double bw) {
  double bits = 0.0;
  for (double c : inv) {
    if (level > c) bits += std::log2(level / c);
  }
  return bw * bits;
}

}  // namespace

std::vector<double> BisectionWaterFill(double target_bps, std::span<const double> inverse_gains,
                                       double bandwidth_hz) {
  std::vector<double> power(inverse_gains.size(), 0.0);
  if (target_bps <= 0.0 || inverse_gains.empty()) return power;
  double lo = *std::min_element(inverse_gains.begin(), inverse_gains.end());
  if (!std::isfinite(lo)) {
    std::fill(power.begin(), power.end(), kInf);
    return power;
  }
  double hi = lo * 2.0;
  while (RateAtLevel(hi, inverse_gains, bandwidth_hz) < target_bps) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (RateAtLevel(mid, inverse_gains, bandwidth_hz) < target_bps ? lo : hi) = mid;
  }
  for (std::size_t j = 0; j < inverse_gains.size(); ++j) power[j] = std::max(hi - inverse_gains[j], 0.0);
  return power;
}

BruteForceResult BruteForceAllocation(const AllocationProblem& problem) {
  const Index n = problem.users();
  const Index k = problem.channel.subchannels();
  BruteForceResult best;
  best.total_power_w = kInf;

  std::vector<int> owner(static_cast<std::size_t>(k), 0);
  while (true) {
    std::vector<std::vector<double>> inv(static_cast<std::size_t>(n));
    for (Index j = 0; j < k; ++j) {
      const int o = owner[static_cast<std::size_t>(j)];
      inv[static_cast<std::size_t>(o)].push_back(InverseGain(problem, o, j));
    }
    bool ok = true;
    double total = 0.0;
    for (Index i = 0; i < n && ok; ++i) {
      const double target = problem.targets[static_cast<std::size_t>(i)].target_rate_bps;
      if (target <= 0.0) continue;
      if (inv[static_cast<std::size_t>(i)].empty()) {
        ok = false;
        break;
      }
      for (double p : BisectionWaterFill(target, inv[static_cast<std::size_t>(i)], problem.channel.subchannel_bw_hz)) {
        total += p;
      }
    }
    if (ok && std::isfinite(total) && total < best.total_power_w) {
      best.feasible = true;
      best.total_power_w = total;
      best.owner = owner;
    }
    // Next pattern in base-N counting order.
    Index j = 0;
    while (j < k && ++owner[static_cast<std::size_t>(j)] == n) owner[static_cast<std::size_t>(j++)] = 0;
    if (j == k) break;
  }
  if (!best.feasible) best.total_power_w = 0.0;
  return best;
}

double LiteralDualValue(const VectorXd& lambda, const AllocationProblem& problem) {
  const double bw = problem.channel.subchannel_bw_hz;
  double value = 0.0;
  for (Index i = 0; i < problem.users(); ++i) {
    value += lambda(i) * problem.targets[static_cast<std::size_t>(i)].target_rate_bps;
  }
  for (Index j = 0; j < problem.channel.subchannels(); ++j) {
    double best = 0.0;
    for (Index i = 0; i < problem.users(); ++i) {
      const double s_over_h = InverseGain(problem, i, j);
      if (!std::isfinite(s_over_h)) continue;
      const double excess = std::max(lambda(i) * bw / std::numbers::ln2 - s_over_h, 0.0);
      const double mu = lambda(i) * bw * std::log2(1.0 + excess / s_over_h) - excess;
      best = std::max(best, mu);
    }
    value -= best;
  }
  return value;
}

double SubchannelPriceObjective(std::span<const double> bids, double mu) {
  double f = mu;
  for (double b : bids) f += std::max(b - mu, 0.0);
  return f;
}

double GridArgminPrice(std::span<const double> bids, double step_fraction) {
  const auto [mn, mx] = std::minmax_element(bids.begin(), bids.end());
  const double lo = *mn - 1.0;
  const double hi = *mx + 1.0;
  const double step = step_fraction * (hi - lo);
  const auto points = static_cast<long>(std::ceil((hi - lo) / step));
  double fmin = kInf;
  std::vector<double> values(static_cast<std::size_t>(points + 1));
  for (long s = 0; s <= points; ++s) {
    values[static_cast<std::size_t>(s)] = SubchannelPriceObjective(bids, lo + static_cast<double>(s) * step);
    fmin = std::min(fmin, values[static_cast<std::size_t>(s)]);
  }
  const double tol = 1e-9 * (hi - lo);
  for (long s = points; s >= 0; --s) {
    if (values[static_cast<std::size_t>(s)] <= fmin + tol) return lo + static_cast<double>(s) * step;
  }
  return lo;
}

AllocationProblem RandomInstance(std::mt19937_64& gen, int users, int subchannels) {
  LinkParams link;
  link.num_subchannels = subchannels;
  std::uniform_real_distribution<double> dist(1.0, link.cell_radius_m);
  std::exponential_distribution<double> fade(1.0);
  std::uniform_real_distribution<double> efficiency(0.3, 4.0);
  std::bernoulli_distribution idle(0.1);

  AllocationProblem p;
  p.channel.noise_power_w = link.NoisePowerW();
  p.channel.subchannel_bw_hz = link.subchannel_bw_hz;
  p.channel.gains.resize(users, subchannels);
  const double share = static_cast<double>(subchannels) / static_cast<double>(users);
  for (int i = 0; i < users; ++i) {
    const double large_scale = DbToLinear(-PathLossNlos(dist(gen), link.carrier_freq_ghz));
    for (int j = 0; j < subchannels; ++j) p.channel.gains(i, j) = large_scale * fade(gen);
    const double target = idle(gen) ? 0.0 : efficiency(gen) * link.subchannel_bw_hz * std::max(share, 1.0) * 0.5;
    p.targets.push_back({i, "oracle", target});
  }
  return p;
}

SuiteResult AllocationSuite(std::uint64_t seed, int instances) {
  SuiteResult out{"allocator vs exhaustive search", true, 0, 0, 0.0, "relative power excess"};
  std::mt19937_64 gen(seed);
  for (int n = 0; n < instances; ++n) {
    const int users = 1 + static_cast<int>(gen() % 3);
    const int subchannels = 2 + static_cast<int>(gen() % 3);
    const AllocationProblem p = RandomInstance(gen, users, subchannels);
    const BruteForceResult ref = BruteForceAllocation(p);
    const AllocationResult got = Solve(p);
    ++out.cases;
    bool ok;
    double dev = 0.0;
    if (!ref.feasible) {
      ok = !got.feasible;
    } else if (ref.total_power_w == 0.0) {
      ok = got.feasible && got.total_power_w == 0.0;
    } else {
      dev = (got.total_power_w - ref.total_power_w) / ref.total_power_w;
      ok = got.feasible && got.converged && dev <= 0.02 && dev >= -1e-6;
    }
    out.worst = std::max(out.worst, std::abs(dev));
    if (!ok) ++out.failures;
  }
  out.passed = out.failures == 0;
  return out;
}

SuiteResult SubchannelPriceSuite(std::uint64_t seed, int sequences) {
  SuiteResult out{"subchannel price minimiser", true, 0, 0, 0.0, "|argmin - max| / grid step"};
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> len(1, 8);
  std::uniform_real_distribution<double> val(-10.0, 10.0);
  constexpr double kFraction = 1e-3;
  for (int s = 0; s < sequences; ++s) {
    std::vector<double> bids(static_cast<std::size_t>(len(gen)));
    for (auto& b : bids) b = val(gen);
    const double mx = *std::max_element(bids.begin(), bids.end());
    const double mn = *std::min_element(bids.begin(), bids.end());
    const double step = kFraction * ((mx + 1.0) - (mn - 1.0));
    const double dev = std::abs(GridArgminPrice(bids, kFraction) - mx) / step;
    ++out.cases;
    out.worst = std::max(out.worst, dev);
    if (dev > 1.0 + 1e-9 || OptimalSubchannelPrice(bids) != mx) ++out.failures;
  }
  out.passed = out.failures == 0;
  return out;
}

SuiteResult SubgradientSuite(std::uint64_t seed, int points) {
  SuiteResult out{"subgradient vs central differences", true, 0, 0, 0.0, "relative error"};
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> scale(0.8, 4.0);
  int attempts = 0;
  while (out.cases < points && attempts < 100 * points) {
    ++attempts;
    const int users = 2 + static_cast<int>(gen() % 2);
    const int subchannels = 3 + static_cast<int>(gen() % 4);
    AllocationProblem p = RandomInstance(gen, users, subchannels);
    const double bw = p.channel.subchannel_bw_hz;
    VectorXd lambda(users);
    for (int i = 0; i < users; ++i) {
      auto& t = p.targets[static_cast<std::size_t>(i)].target_rate_bps;
      if (t <= 0.0) t = bw;
      std::vector<double> inv;
      for (int j = 0; j < subchannels; ++j) inv.push_back(InverseGain(p, i, j));
      lambda(i) = ClosedFormLambda(t, inv, bw) * scale(gen);
    }
    const SubchannelAssignment at = AssignSubchannels(lambda, p);
    const VectorXd g = Subgradient(lambda, p, at);
    bool stable = true;
    for (int i = 0; i < users && stable; ++i) {
      const double level = lambda(i) * bw / std::numbers::ln2;
      for (int j = 0; j < subchannels; ++j) {
        if (std::abs(level - InverseGain(p, i, j)) < 1e-3 * level) stable = false;
      }
      const double eps = 1e-6 * lambda(i);
      for (double sgn : {-1.0, 1.0}) {
        VectorXd probe = lambda;
        probe(i) += sgn * eps;
        if (AssignSubchannels(probe, p).owner != at.owner) stable = false;
      }
    }
    if (!stable) continue;
    for (int i = 0; i < users; ++i) {
      const double eps = 1e-6 * lambda(i);
      VectorXd up = lambda, down = lambda;
      up(i) += eps;
      down(i) -= eps;
      const double fd = (LiteralDualValue(up, p) - LiteralDualValue(down, p)) / (2.0 * eps);
      const double dev = std::abs(fd - g(i)) / std::max(std::abs(g(i)), bw);
      out.worst = std::max(out.worst, dev);
      if (dev > 1e-3) ++out.failures;
    }
    ++out.cases;
  }
  out.passed = out.failures == 0 && out.cases == points;
  return out;
}

SuiteResult Mm1Suite(std::uint64_t seed, std::uint64_t packets) {
  SuiteResult out{"M/M/1 delay tail vs exp(-(r-a)D)", true, 0, 0, 0.0, "relative error"};
  constexpr double kArrival = 100.0;
  constexpr double kService = 1000.0;
  for (double margin : {0.5, 1.0, 2.0, 3.0, 5.0, 7.0}) {
    const double d_max = margin / (kService - kArrival);
    const double expected = DelayOutageProbability(kService, kArrival, d_max);
    const double empirical = SimulateMm1DelayTail(kArrival, kService, d_max, packets, seed + out.cases,
                                                TailEstimator::kConditional);
    const double dev = std::abs(empirical - expected) / expected;
    ++out.cases;
    out.worst = std::max(out.worst, dev);
    if (dev > 0.05) ++out.failures;
  }
  out.passed = out.failures == 0;
  return out;
}

std::vector<SuiteResult> RunAllSuites(std::uint64_t seed, const OracleOptions& options) {
  return {AllocationSuite(seed, options.allocation_instances),
          SubchannelPriceSuite(seed + 1, options.price_sequences),
          SubgradientSuite(seed + 2, options.subgradient_points), Mm1Suite(seed + 3, options.mm1_packets)};
}

}  // namespace slicealloc::oracle
