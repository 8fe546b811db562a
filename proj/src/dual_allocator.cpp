#include "slicealloc/dual_allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace slicealloc {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kLn2 = std::numbers::ln2;
constexpr double kInf = std::numeric_limits<double>::infinity();

// mu as a function of the water level w = lambda B / ln2 and the inverse gain c:
// w ln(w / c) - w + c above the clip, 0 below it.
inline double MuFromLevel(double w, double log_w, double c, double log_c) {
  return w > c ? w * (log_w - log_c - 1.0) + c : 0.0;
}

// Problem data rearranged for the inner loop.
struct PricedProblem {
  Index n = 0;
  Index k = 0;
  double bw = 0.0;
  MatrixXd inv_gain;      // sigma^2 / (beta h), +inf when unusable
  MatrixXd log_inv_gain;
  VectorXd target;

  explicit PricedProblem(const AllocationProblem& p)
      : n(p.users()), k(p.channel.subchannels()), bw(p.channel.subchannel_bw_hz) {
    inv_gain.resize(n, k);
    log_inv_gain.resize(n, k);
    target.resize(n);
    for (Index i = 0; i < n; ++i) {
      target(i) = p.targets[static_cast<std::size_t>(i)].target_rate_bps;
      const double beta = p.Beta(i);
      for (Index j = 0; j < k; ++j) {
        const double h = p.channel.gains(i, j);
        const double c = (h >= kMinUsableGain && beta > 0.0) ? p.channel.noise_power_w / (beta * h) : kInf;
        inv_gain(i, j) = c;
        log_inv_gain(i, j) = std::log(c);
      }
    }
  }

  double Level(double lambda) const { return std::max(lambda, 0.0) * bw / kLn2; }
};

struct DualPoint {
  std::vector<int> owner;
  VectorXd subgradient;
  double value = 0.0;
};

DualPoint EvaluateDual(const PricedProblem& pp, const VectorXd& lambda) {
  DualPoint out;
  out.owner.assign(static_cast<std::size_t>(pp.k), -1);
  VectorXd level(pp.n), log_level(pp.n);
  for (Index i = 0; i < pp.n; ++i) {
    level(i) = pp.Level(lambda(i));
    log_level(i) = level(i) > 0.0 ? std::log(level(i)) : -kInf;
  }
  double price_sum = 0.0;
  out.subgradient = pp.target;
  for (Index j = 0; j < pp.k; ++j) {
    double best = 0.0;
    int owner = -1;
    for (Index i = 0; i < pp.n; ++i) {
      const double mu = MuFromLevel(level(i), log_level(i), pp.inv_gain(i, j), pp.log_inv_gain(i, j));
      if (mu > best) {
        best = mu;
        owner = static_cast<int>(i);
      }
    }
    out.owner[static_cast<std::size_t>(j)] = owner;
    price_sum += best;
    if (owner >= 0) {
      out.subgradient(owner) -= pp.bw * (log_level(owner) - pp.log_inv_gain(owner, j)) / kLn2;
    }
  }
  double linear = 0.0;
  for (Index i = 0; i < pp.n; ++i) linear += std::max(lambda(i), 0.0) * pp.target(i);
  out.value = linear - price_sum;
  return out;
}

struct PrimalCandidate {
  std::vector<int> owner;
  std::vector<WaterFillResult> fills;  // per user, aligned with the user's owned channels
  double power = kInf;
};

// Water-fills every user over the channels it owns. Returns nullopt if a user with
// a positive target owns nothing.
std::optional<PrimalCandidate> EvaluatePrimal(const PricedProblem& pp, const std::vector<int>& owner) {
  std::vector<std::vector<double>> inv(static_cast<std::size_t>(pp.n));
  for (Index j = 0; j < pp.k; ++j) {
    const int o = owner[static_cast<std::size_t>(j)];
    if (o >= 0) inv[static_cast<std::size_t>(o)].push_back(pp.inv_gain(o, j));
  }
  PrimalCandidate cand;
  cand.owner = owner;
  cand.fills.resize(static_cast<std::size_t>(pp.n));
  double total = 0.0;
  for (Index i = 0; i < pp.n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (pp.target(i) <= 0.0) {
      cand.fills[ui].power.assign(inv[ui].size(), 0.0);
      continue;
    }
    if (inv[ui].empty()) return std::nullopt;
    cand.fills[ui] = WaterFill(pp.target(i), inv[ui], pp.bw);
    for (double p : cand.fills[ui].power) total += p;
  }
  cand.power = total;
  return cand;
}

// Hands each starved user one channel. Near the dual optimum several users tie
// on a channel and the strict tie-break can starve one of them for good. The user
// takes the channel where its bid comes closest to the owner's, never leaving the
// owner empty-handed. Returns false if some user cannot be served.
bool RepairOwnership(const PricedProblem& pp, const VectorXd& lambda, std::vector<int>& owner) {
  std::vector<int> count(static_cast<std::size_t>(pp.n), 0);
  for (int o : owner) {
    if (o >= 0) ++count[static_cast<std::size_t>(o)];
  }
  VectorXd level(pp.n), log_level(pp.n);
  for (Index i = 0; i < pp.n; ++i) {
    level(i) = pp.Level(lambda(i));
    log_level(i) = level(i) > 0.0 ? std::log(level(i)) : -kInf;
  }
  auto bid = [&](Index i, Index j) {
    return MuFromLevel(level(i), log_level(i), pp.inv_gain(i, j), pp.log_inv_gain(i, j));
  };
  for (Index i = 0; i < pp.n; ++i) {
    if (pp.target(i) <= 0.0 || count[static_cast<std::size_t>(i)] > 0) continue;
    // Free channels first (best gain), then the smallest relative bid shortfall.
    std::pair<int, double> best_key{-1, 0.0};
    Index best_j = -1;
    for (Index j = 0; j < pp.k; ++j) {
      if (!std::isfinite(pp.inv_gain(i, j))) continue;
      const int o = owner[static_cast<std::size_t>(j)];
      const bool free = o < 0 || pp.target(o) <= 0.0;
      if (!free && count[static_cast<std::size_t>(o)] < 2) continue;
      std::pair<int, double> key;
      if (free) {
        key = {2, -pp.log_inv_gain(i, j)};
      } else {
        const double mine = bid(i, j);
        const double theirs = bid(o, j);
        key = mine > 0.0 && theirs > 0.0 ? std::pair{1, std::log(mine / theirs)}
                                         : std::pair{0, -(pp.log_inv_gain(i, j) - pp.log_inv_gain(o, j))};
      }
      if (best_j < 0 || key > best_key) {
        best_key = key;
        best_j = j;
      }
    }
    if (best_j < 0) return false;
    const int prev = owner[static_cast<std::size_t>(best_j)];
    if (prev >= 0) --count[static_cast<std::size_t>(prev)];
    owner[static_cast<std::size_t>(best_j)] = static_cast<int>(i);
    ++count[static_cast<std::size_t>(i)];
  }
  return true;
}

// Local search over ownership patterns. Descent applies single-channel moves and
// pairwise swaps (plus three-way rotations on small instances) while they lower
// the total power. On small instances it also restarts from every forced single
// move, which escapes optima needing several simultaneous changes.
// Rotations and restarts are cubic in K; worth it only where each user holds a
// handful of channels and the integrality gap is large.
constexpr Index kSmallInstance = 64;

class OwnershipSearch {
 public:
  OwnershipSearch(const PricedProblem& pp, const std::vector<int>& owner)
      : pp_(pp),
        small_(pp.n >= 2 && pp.k * pp.n <= kSmallInstance) {
    Load(owner);
  }

  double total() const { return std::accumulate(user_cost_.begin(), user_cost_.end(), 0.0); }
  const std::vector<int>& owner() const { return owner_; }

  void Descend(int max_passes) {
    for (int pass = 0; pass < max_passes; ++pass) {
      if (!(MovePass() || (small_ && pp_.n >= 3 && CyclePass()))) break;
    }
  }

  void Perturb(int max_passes) {
    if (!small_) return;
    bool improved = true;
    while (improved) {
      improved = false;
      const std::vector<int> best = owner_;
      const double best_total = total();
      for (Index j = 0; j < pp_.k && !improved; ++j) {
        const int o = best[static_cast<std::size_t>(j)];
        for (Index i = 0; i < pp_.n && !improved; ++i) {
          if (i == o || pp_.target(i) <= 0.0 || !std::isfinite(pp_.inv_gain(i, j))) continue;
          std::vector<int> trial = best;
          trial[static_cast<std::size_t>(j)] = static_cast<int>(i);
          Load(trial);
          if (!std::isfinite(total())) continue;
          Descend(max_passes);
          improved = total() < best_total * (1.0 - 1e-12);
        }
      }
      if (!improved) Load(best);
    }
  }

 private:
  void Load(const std::vector<int>& owner) {
    owner_ = owner;
    sets_.assign(static_cast<std::size_t>(pp_.n), {});
    for (Index j = 0; j < pp_.k; ++j) {
      const int o = owner_[static_cast<std::size_t>(j)];
      if (o >= 0) sets_[static_cast<std::size_t>(o)].push_back(j);
    }
    user_cost_.resize(static_cast<std::size_t>(pp_.n));
    for (Index i = 0; i < pp_.n; ++i) user_cost_[static_cast<std::size_t>(i)] = Cost(i, sets_[static_cast<std::size_t>(i)]);
  }

  double Cost(Index i, const std::vector<Index>& set) const {
    if (pp_.target(i) <= 0.0) return 0.0;
    if (set.empty()) return kInf;
    std::vector<double> inv;
    inv.reserve(set.size());
    for (Index j : set) inv.push_back(pp_.inv_gain(i, j));
    const WaterFillResult f = WaterFill(pp_.target(i), inv, pp_.bw);
    return std::accumulate(f.power.begin(), f.power.end(), 0.0);
  }

  static std::vector<Index> Without(std::vector<Index> set, Index j) {
    set.erase(std::find(set.begin(), set.end(), j));
    return set;
  }
  static std::vector<Index> With(std::vector<Index> set, Index j) {
    set.insert(std::lower_bound(set.begin(), set.end(), j), j);
    return set;
  }

  struct Change {
    Index user;
    std::vector<Index> set;
    double cost;
  };
  Change Make(Index user, std::vector<Index> set) const {
    const double c = Cost(user, set);
    return {user, std::move(set), c};
  }

  // Replaces the sets of the listed users if that lowers their combined cost.
  bool Commit(std::initializer_list<Change> change) {
    double before = 0.0, after = 0.0;
    for (const auto& c : change) {
      before += user_cost_[static_cast<std::size_t>(c.user)];
      after += c.cost;
    }
    if (!(after < before * (1.0 - 1e-12))) return false;
    for (const auto& c : change) {
      const auto u = static_cast<std::size_t>(c.user);
      for (Index j : c.set) owner_[static_cast<std::size_t>(j)] = static_cast<int>(c.user);
      sets_[u] = c.set;
      user_cost_[u] = c.cost;
    }
    return true;
  }

  bool Usable(Index i, Index j) const { return std::isfinite(pp_.inv_gain(i, j)); }

  bool MovePass() {
    bool improved = false;
    for (Index j = 0; j < pp_.k; ++j) {
      const int o = owner_[static_cast<std::size_t>(j)];
      if (o < 0) continue;
      const Change o_less = Make(o, Without(sets_[static_cast<std::size_t>(o)], j));
      for (Index i = 0; i < pp_.n; ++i) {
        if (i == o || pp_.target(i) <= 0.0 || !Usable(i, j)) continue;
        const auto& si = sets_[static_cast<std::size_t>(i)];
        const Change i_more = Make(i, With(si, j));
        if (Commit({o_less, i_more})) {
          improved = true;
          break;
        }
        bool swapped = false;
        for (Index l : si) {
          if (!Usable(o, l)) continue;
          if (Commit({Make(o, With(o_less.set, l)), Make(i, With(Without(si, l), j))})) {
            swapped = true;
            break;
          }
        }
        if (swapped) {
          improved = true;
          break;
        }
      }
    }
    return improved;
  }

  // Rotation j: a -> b, l: b -> c, m: c -> a.
  bool CyclePass() {
    for (Index j = 0; j < pp_.k; ++j) {
      const int a = owner_[static_cast<std::size_t>(j)];
      if (a < 0 || pp_.target(a) <= 0.0) continue;
      for (Index l = 0; l < pp_.k; ++l) {
        const int b = owner_[static_cast<std::size_t>(l)];
        if (b < 0 || b == a || pp_.target(b) <= 0.0 || !Usable(b, j)) continue;
        for (Index m = 0; m < pp_.k; ++m) {
          const int c = owner_[static_cast<std::size_t>(m)];
          if (c < 0 || c == a || c == b || pp_.target(c) <= 0.0 || !Usable(c, l) || !Usable(a, m)) continue;
          const auto& sa = sets_[static_cast<std::size_t>(a)];
          const auto& sb = sets_[static_cast<std::size_t>(b)];
          const auto& sc = sets_[static_cast<std::size_t>(c)];
          if (Commit({Make(a, With(Without(sa, j), m)), Make(b, With(Without(sb, l), j)),
                      Make(c, With(Without(sc, m), l))})) {
            return true;
          }
        }
      }
    }
    return false;
  }

  const PricedProblem& pp_;
  const bool small_;
  std::vector<int> owner_;
  std::vector<std::vector<Index>> sets_;
  std::vector<double> user_cost_;
};

PrimalCandidate Polish(const PricedProblem& pp, PrimalCandidate cand, int max_passes) {
  OwnershipSearch search(pp, cand.owner);
  search.Descend(max_passes);
  search.Perturb(max_passes);
  auto out = EvaluatePrimal(pp, search.owner());
  return out && out->power < cand.power ? std::move(*out) : cand;
}

// Cheapest distinct ownership patterns seen during the search, seeds for Polish.
constexpr std::size_t kPolishSeeds = 6;

void KeepCandidate(std::vector<PrimalCandidate>& pool, PrimalCandidate cand) {
  for (const auto& c : pool) {
    if (c.owner == cand.owner) return;
  }
  pool.push_back(std::move(cand));
  std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.power < b.power; });
  if (pool.size() > kPolishSeeds) pool.pop_back();
}

// phi(w) = a w - (1/m) sum_j mu(w, c_j), an upper bound on one user's share of the dual.
struct ShareFunction {
  const PricedProblem& pp;
  Index user;
  double slope;   // ln2 * r / B
  double inv_m;   // 1 / number of competing users

  double Value(double w) const {
    const double lw = std::log(w);
    double s = 0.0;
    for (Index j = 0; j < pp.k; ++j) s += MuFromLevel(w, lw, pp.inv_gain(user, j), pp.log_inv_gain(user, j));
    return slope * w - inv_m * s;
  }
  double Derivative(double w) const {
    const double lw = std::log(w);
    double s = 0.0;
    for (Index j = 0; j < pp.k; ++j) {
      if (w > pp.inv_gain(user, j)) s += lw - pp.log_inv_gain(user, j);
    }
    return slope - inv_m * s;
  }
};

// Largest x in [lo, inf) with pred(x) true, assuming pred is true at lo and eventually false.
template <typename Pred>
double BisectUpward(double lo, Pred pred) {
  double hi = std::max(lo, 1e-300) * 2.0;
  while (pred(hi)) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return kInf;
  }
  for (int it = 0; it < 200 && hi > lo * (1.0 + 1e-12); ++it) {
    const double mid = std::sqrt(lo * hi);
    (pred(mid) ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace

void AllocationProblem::Validate() const {
  if (targets.empty()) throw std::invalid_argument("allocation problem: no users");
  if (channel.users() != users()) {
    throw std::invalid_argument("allocation problem: channel has " + std::to_string(channel.users()) +
                                " rows for " + std::to_string(users()) + " users");
  }
  if (channel.subchannels() < 1) throw std::invalid_argument("allocation problem: no subchannels");
  if (!(channel.noise_power_w > 0.0) || !(channel.subchannel_bw_hz > 0.0)) {
    throw std::invalid_argument("allocation problem: noise power and bandwidth must be > 0");
  }
  for (const auto& t : targets) {
    if (!(t.target_rate_bps >= 0.0) || !std::isfinite(t.target_rate_bps)) {
      throw std::invalid_argument("allocation problem: user " + std::to_string(t.user_id) +
                                  " has an invalid target rate");
    }
  }
  if (!beta.empty() && beta.size() != targets.size()) {
    throw std::invalid_argument("allocation problem: beta must be empty or one per user");
  }
  if (!(channel.gains.array() >= 0.0).all() || !channel.gains.allFinite()) {
    throw std::invalid_argument("allocation problem: gains must be finite and nonnegative");
  }
}

double AllocationProblem::Beta(Index user) const {
  return beta.empty() ? 1.0 : beta[static_cast<std::size_t>(user)];
}

double Rate(const ChannelState& channel, Index user, double beta, std::span<const double> power_row,
            std::span<const int> assign_row) {
  double bits = 0.0;
  for (std::size_t j = 0; j < assign_row.size(); ++j) {
    if (assign_row[j] == 0) continue;
    const double snr = beta * power_row[j] * channel.gains(user, static_cast<Index>(j)) / channel.noise_power_w;
    bits += std::log2(1.0 + snr);
  }
  return channel.subchannel_bw_hz * bits;
}

VectorXd PowerForLambda(double lambda, const ChannelState& channel, Index user, std::span<const int> assign_row,
                        double beta) {
  const double level = std::max(lambda, 0.0) * channel.subchannel_bw_hz / kLn2;
  VectorXd p = VectorXd::Zero(static_cast<Index>(assign_row.size()));
  for (std::size_t j = 0; j < assign_row.size(); ++j) {
    if (assign_row[j] == 0) continue;
    const double h = channel.gains(user, static_cast<Index>(j));
    if (h < kMinUsableGain) continue;
    p(static_cast<Index>(j)) = std::max(level - channel.noise_power_w / (beta * h), 0.0);
  }
  return p;
}

double MuValue(double lambda, double h_over_sigma2, double bandwidth_hz) {
  if (!(h_over_sigma2 > 0.0)) return 0.0;
  const double w = std::max(lambda, 0.0) * bandwidth_hz / kLn2;
  const double c = 1.0 / h_over_sigma2;
  if (w <= c) return 0.0;
  return MuFromLevel(w, std::log(w), c, std::log(c));
}

SubchannelAssignment AssignSubchannels(const VectorXd& lambda, const AllocationProblem& problem) {
  const PricedProblem pp(problem);
  SubchannelAssignment out;
  out.owner = EvaluateDual(pp, lambda).owner;
  out.sets.resize(static_cast<std::size_t>(pp.n));
  for (std::size_t j = 0; j < out.owner.size(); ++j) {
    if (out.owner[j] >= 0) out.sets[static_cast<std::size_t>(out.owner[j])].push_back(static_cast<Index>(j));
  }
  return out;
}

double DualValue(const VectorXd& lambda, const AllocationProblem& problem) {
  return EvaluateDual(PricedProblem(problem), lambda).value;
}

VectorXd Subgradient(const VectorXd& lambda, const AllocationProblem& problem, const SubchannelAssignment& assignment) {
  const PricedProblem pp(problem);
  VectorXd g = pp.target;
  for (Index i = 0; i < pp.n; ++i) {
    const double w = pp.Level(lambda(i));
    for (Index j : assignment.sets[static_cast<std::size_t>(i)]) {
      if (w > pp.inv_gain(i, j)) g(i) -= pp.bw * std::log2(w / pp.inv_gain(i, j));
    }
  }
  return g;
}

double LambdaUpperBound(double target_bps, std::span<const double> inverse_gains, double bandwidth_hz) {
  double sum = 0.0;
  for (double c : inverse_gains) sum += c;
  return std::exp2(target_bps / bandwidth_hz) * kLn2 / bandwidth_hz * sum;
}

double ClosedFormLambda(double target_bps, std::span<const double> inverse_gains, double bandwidth_hz) {
  if (inverse_gains.empty()) throw std::invalid_argument("closed-form lambda: empty subchannel set");
  const auto m = static_cast<double>(inverse_gains.size());
  double log2_sum = 0.0;
  for (double c : inverse_gains) log2_sum += std::log2(c);
  return std::exp2(target_bps / (bandwidth_hz * m) + log2_sum / m) * kLn2 / bandwidth_hz;
}

WaterFillResult WaterFill(double target_bps, std::span<const double> inverse_gains, double bandwidth_hz) {
  WaterFillResult out;
  out.power.assign(inverse_gains.size(), 0.0);
  if (target_bps <= 0.0 || inverse_gains.empty()) return out;

  std::vector<std::size_t> order(inverse_gains.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return inverse_gains[a] < inverse_gains[b]; });

  // Grow the active set from the strongest channel until the level stops
  // reaching the next channel.
  double log2_sum = 0.0;
  std::size_t active = 0;
  double level = 0.0;
  for (std::size_t m = 1; m <= order.size(); ++m) {
    log2_sum += std::log2(inverse_gains[order[m - 1]]);
    const double md = static_cast<double>(m);
    level = std::exp2(target_bps / (bandwidth_hz * md) + log2_sum / md);
    active = m;
    if (m == order.size() || level <= inverse_gains[order[m]]) break;
  }
  for (std::size_t m = 0; m < active; ++m) {
    out.power[order[m]] = std::max(level - inverse_gains[order[m]], 0.0);
  }
  out.level_w = level;
  out.lambda = level * kLn2 / bandwidth_hz;
  return out;
}

VectorXd LambdaEnclosingBounds(const AllocationProblem& problem) {
  const PricedProblem pp(problem);
  std::vector<Index> active;
  for (Index i = 0; i < pp.n; ++i) {
    if (pp.target(i) > 0.0) active.push_back(i);
  }
  VectorXd bound = VectorXd::Zero(pp.n);
  if (active.empty()) return bound;

  const double inv_m = 1.0 / static_cast<double>(active.size());
  std::vector<ShareFunction> share;
  std::vector<double> peak_level(active.size()), peak_value(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    const Index i = active[a];
    share.push_back({pp, i, kLn2 * pp.target(i) / pp.bw, inv_m});
    const double cmin = pp.inv_gain.row(i).minCoeff();
    if (!std::isfinite(cmin)) {
      peak_level[a] = kInf;
      peak_value[a] = kInf;
      continue;
    }
    const auto& f = share.back();
    peak_level[a] = BisectUpward(cmin, [&](double w) { return f.Derivative(w) > 0.0; });
    peak_value[a] = std::isfinite(peak_level[a]) ? f.Value(peak_level[a]) : kInf;
  }
  const double peak_total = std::accumulate(peak_value.begin(), peak_value.end(), 0.0);

  for (std::size_t a = 0; a < active.size(); ++a) {
    const Index i = active[a];
    std::vector<double> row;
    for (Index j = 0; j < pp.k; ++j) {
      if (std::isfinite(pp.inv_gain(i, j))) row.push_back(pp.inv_gain(i, j));
    }
    const double loose = row.empty() ? kInf : LambdaUpperBound(pp.target(i), row, pp.bw);
    double tight = kInf;
    if (std::isfinite(peak_total) && std::isfinite(peak_level[a])) {
      const double others = peak_total - peak_value[a];
      const auto& f = share[a];
      const double level = BisectUpward(peak_level[a], [&](double w) { return f.Value(w) >= -others; });
      tight = level * kLn2 / pp.bw;
    }
    bound(i) = std::min(loose, tight);
  }
  return bound;
}

double OptimalSubchannelPrice(std::span<const double> bids) {
  if (bids.empty()) return 0.0;
  return *std::max_element(bids.begin(), bids.end());
}

AllocationResult Solve(const AllocationProblem& problem, const SolverOptions& options) {
  problem.Validate();
  const PricedProblem pp(problem);
  const Index n = pp.n;
  const Index k = pp.k;

  AllocationResult result;
  result.power = MatrixXd::Zero(n, k);
  result.assignment = Eigen::MatrixXi::Zero(n, k);
  result.lambda = VectorXd::Zero(n);
  result.dual_lambda = VectorXd::Zero(n);
  result.rates = VectorXd::Zero(n);

  std::vector<Index> active;
  for (Index i = 0; i < n; ++i) {
    if (pp.target(i) > 0.0) active.push_back(i);
  }
  if (active.empty()) {
    result.converged = true;
    return result;
  }
  for (Index i : active) {
    if (!pp.inv_gain.row(i).allFinite()) {
      bool any = false;
      for (Index j = 0; j < k; ++j) any = any || std::isfinite(pp.inv_gain(i, j));
      if (!any) result.starved_users.push_back(i);
    }
  }
  if (!result.starved_users.empty()) {
    result.feasible = false;
    return result;
  }

  // Search only over users with demand; the rest sit at lambda = 0.
  const auto dim = static_cast<Index>(active.size());
  const VectorXd upper_full = LambdaEnclosingBounds(problem);
  VectorXd upper(dim), center(dim);
  for (Index a = 0; a < dim; ++a) {
    upper(a) = upper_full(active[static_cast<std::size_t>(a)]);
    if (!std::isfinite(upper(a)) || !(upper(a) > 0.0)) {
      throw std::runtime_error("solve: could not bound the multiplier of user " +
                               std::to_string(active[static_cast<std::size_t>(a)]));
    }
    center(a) = upper(a) / 2.0;
    if (options.warm_start && options.warm_start->size() == n) {
      const double hint = (*options.warm_start)(active[static_cast<std::size_t>(a)]);
      if (std::isfinite(hint)) center(a) = std::clamp(hint, 0.0, upper(a));
    }
  }
  // Axis-aligned ellipsoid enclosing the box [0, upper] around the centre.
  MatrixXd shape = MatrixXd::Zero(dim, dim);
  for (Index a = 0; a < dim; ++a) {
    const double half = std::max(center(a), upper(a) - center(a));
    shape(a, a) = static_cast<double>(dim) * half * half;
  }

  const std::size_t cap = options.max_iterations > 0
                              ? options.max_iterations
                              : static_cast<std::size_t>(50 * n * n);
  const double nd = static_cast<double>(dim);

  VectorXd full_lambda = VectorXd::Zero(n);
  double best_dual = -kInf;
  VectorXd best_dual_lambda = VectorXd::Zero(n);
  std::optional<PrimalCandidate> best_primal;
  std::vector<PrimalCandidate> pool;
  std::vector<int> last_owner;
  std::vector<int> best_dual_owner;

  if (options.incumbent_owner && options.incumbent_owner->size() == static_cast<std::size_t>(k)) {
    std::vector<int> owner = *options.incumbent_owner;
    for (int& o : owner) {
      if (o >= n) o = -1;
    }
    if (auto cand = EvaluatePrimal(pp, owner)) {
      best_primal = cand;
      KeepCandidate(pool, std::move(*cand));
    }
  }

  // Primal recovery costs a water-fill per user; on large problems sample it.
  const auto recovery_stride = static_cast<std::size_t>(std::max<Index>(1, dim / 2));

  std::size_t it = 0;
  for (; it < cap; ++it) {
    for (Index a = 0; a < dim; ++a) full_lambda(active[static_cast<std::size_t>(a)]) = std::max(center(a), 0.0);
    DualPoint point = EvaluateDual(pp, full_lambda);
    if (point.value > best_dual) {
      best_dual = point.value;
      best_dual_lambda = full_lambda;
      best_dual_owner = point.owner;
    }
    if (point.owner != last_owner && (!best_primal || it % recovery_stride == 0)) {
      auto cand = EvaluatePrimal(pp, point.owner);
      if (!cand) {
        std::vector<int> repaired = point.owner;
        if (RepairOwnership(pp, full_lambda, repaired)) cand = EvaluatePrimal(pp, repaired);
      }
      if (cand) {
        if (!best_primal || cand->power < best_primal->power) best_primal = cand;
        KeepCandidate(pool, std::move(*cand));
      }
      last_owner = point.owner;
    }

    if (best_primal && best_primal->power - best_dual <= options.gap_tolerance * best_primal->power) {
      result.converged = true;
      break;
    }
    VectorXd g(dim);
    for (Index a = 0; a < dim; ++a) g(a) = point.subgradient(active[static_cast<std::size_t>(a)]);
    const VectorXd dg = shape * g;
    const double q = g.dot(dg);
    // sqrt(q) bounds how far the dual can still rise inside the ellipsoid. Scale it by
    // the best dual value: early primal candidates can be off by orders of magnitude.
    if (!(q > 0.0) || (best_dual > 0.0 && std::sqrt(q) <= options.rel_tolerance * best_dual)) {
      result.converged = true;
      break;
    }

    // Central cut keeping the half-space g'(x - centre) >= 0 that holds the maximiser.
    const VectorXd step = dg / std::sqrt(q);
    if (dim == 1) {
      center += step / 2.0;
      shape /= 4.0;
    } else {
      center += step / (nd + 1.0);
      shape = (nd * nd / (nd * nd - 1.0)) * (shape - (2.0 / (nd + 1.0)) * step * step.transpose());
      shape = 0.5 * (shape + shape.transpose());
    }
  }
  result.iterations = it;
  if (!best_dual_owner.empty()) {
    std::vector<int> owner = best_dual_owner;
    if (RepairOwnership(pp, best_dual_lambda, owner)) {
      if (auto cand = EvaluatePrimal(pp, owner)) {
        if (!best_primal || cand->power < best_primal->power) best_primal = cand;
        KeepCandidate(pool, std::move(*cand));
      }
    }
  }
  result.dual_lambda = best_dual_lambda;
  result.dual_value = std::max(best_dual, 0.0);

  if (!best_primal) {
    result.feasible = false;
    result.converged = false;
    std::vector<bool> owns(static_cast<std::size_t>(n), false);
    for (int o : best_dual_owner) {
      if (o >= 0) owns[static_cast<std::size_t>(o)] = true;
    }
    for (Index i : active) {
      if (!owns[static_cast<std::size_t>(i)]) result.starved_users.push_back(i);
    }
    return result;
  }

  for (auto& c : pool) {
    if (options.polish_passes <= 0) break;
    PrimalCandidate polished = Polish(pp, std::move(c), options.polish_passes);
    if (polished.power < best_primal->power) best_primal = std::move(polished);
  }

  // Rebuild p, x from the chosen ownership with exact per-user water levels.
  std::vector<std::size_t> cursor(static_cast<std::size_t>(n), 0);
  for (Index j = 0; j < k; ++j) {
    const int o = best_primal->owner[static_cast<std::size_t>(j)];
    if (o < 0) continue;
    const auto uo = static_cast<std::size_t>(o);
    result.assignment(o, j) = 1;
    result.power(o, j) = best_primal->fills[uo].power[cursor[uo]++];
  }
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    result.lambda(i) = best_primal->fills[static_cast<std::size_t>(i)].lambda;
    std::vector<double> prow(static_cast<std::size_t>(k));
    std::vector<int> xrow(static_cast<std::size_t>(k));
    for (Index j = 0; j < k; ++j) {
      prow[static_cast<std::size_t>(j)] = result.power(i, j);
      xrow[static_cast<std::size_t>(j)] = result.assignment(i, j);
      total += result.power(i, j);
    }
    result.rates(i) = Rate(problem.channel, i, problem.Beta(i), prow, xrow);
  }
  result.total_power_w = total;
  result.duality_gap = total - result.dual_value;
  return result;
}

}  // namespace slicealloc
