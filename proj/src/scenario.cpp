#include "slicealloc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "slicealloc/errors.hpp"
#include "slicealloc/rng.hpp"
#include "slicealloc/units.hpp"

namespace slicealloc {
namespace {

constexpr std::uint64_t kSlotStreamTag = 0x5107ull;

std::uint64_t SlotSeed(std::uint64_t base, int slot) {
  auto gen = MakeStream(base, {kSlotStreamTag, static_cast<std::uint64_t>(slot)});
  return gen();
}

}  // namespace

void ScenarioConfig::Validate() const {
  link.Validate();
  if (num_slots < 0) throw std::invalid_argument("num_slots must be >= 0");
  std::set<std::string> ids;
  for (const auto& s : slices) {
    if (s.id.empty()) throw std::invalid_argument("slice id must not be empty");
    if (!ids.insert(s.id).second) throw std::invalid_argument("duplicate slice id '" + s.id + "'");
    s.Validate();
  }
  if (!schedule.empty()) {
    int expect = 0;
    for (const auto& seg : schedule) {
      if (seg.from_slot != expect) {
        throw std::invalid_argument("schedule: segment starting at " + std::to_string(seg.from_slot) +
                                    " leaves a gap or overlap (expected " + std::to_string(expect) + ")");
      }
      if (seg.to_slot <= seg.from_slot) throw std::invalid_argument("schedule: empty or reversed segment");
      for (const auto& [id, count] : seg.users) {
        if (!ids.contains(id)) throw std::invalid_argument("schedule: unknown slice '" + id + "'");
        if (count < 0) throw std::invalid_argument("schedule: negative user count for '" + id + "'");
      }
      expect = seg.to_slot;
    }
    if (expect < num_slots) throw std::invalid_argument("schedule ends before num_slots");
  }
  for (const auto& [id, rate] : targets_override_bps) {
    if (!ids.contains(id)) throw std::invalid_argument("targets override: unknown slice '" + id + "'");
    if (Slice(id).kind == SliceKind::kCapacityLimited) {
      throw std::invalid_argument("targets override: CL slice '" + id + "' is driven by its capacity");
    }
    if (!(rate >= 0.0)) throw std::invalid_argument("targets override for '" + id + "' must be >= 0");
  }
  if (!(controller_gain_factor > 0.0 && controller_gain_factor < 1.0)) {
    throw std::invalid_argument("controller_gain_factor must lie in (0, 1)");
  }
  PowerBudget{DbmToWatts(power_budget_dbm), admission_tolerance}.Validate();
  if (!(admission_rate_unit_bps > 0.0)) throw std::invalid_argument("admission rate unit must be > 0");
}

const SliceSpec& ScenarioConfig::Slice(const std::string& id) const {
  for (const auto& s : slices) {
    if (s.id == id) return s;
  }
  throw std::out_of_range("no slice '" + id + "'");
}

const SliceSlotMetrics& SlotMetrics::Slice(const std::string& id) const {
  for (const auto& s : slices) {
    if (s.slice_id == id) return s;
  }
  throw std::out_of_range("no slice '" + id + "' in slot metrics");
}

std::vector<std::map<std::string, std::vector<int>>> PopulationSchedule(const ScenarioConfig& config) {
  std::vector<std::map<std::string, std::vector<int>>> out(static_cast<std::size_t>(std::max(config.num_slots, 0)));
  std::map<std::string, std::vector<int>> current;
  for (const auto& s : config.slices) current[s.id];
  int next_id = 0;
  std::size_t seg = 0;
  for (int t = 0; t < config.num_slots; ++t) {
    while (seg < config.schedule.size() && config.schedule[seg].to_slot <= t) ++seg;
    for (const auto& s : config.slices) {
      int want = 0;
      if (seg < config.schedule.size() && config.schedule[seg].from_slot <= t) {
        const auto& users = config.schedule[seg].users;
        if (auto it = users.find(s.id); it != users.end()) want = it->second;
      }
      auto& members = current[s.id];
      while (static_cast<int>(members.size()) > want) members.pop_back();
      while (static_cast<int>(members.size()) < want) members.push_back(next_id++);
    }
    out[static_cast<std::size_t>(t)] = current;
  }
  return out;
}

Simulation::Simulation(ScenarioConfig config) : config_(std::move(config)) {
  config_.Validate();
  population_ = PopulationSchedule(config_);
  for (const auto& s : config_.slices) {
    if (s.kind == SliceKind::kCapacityLimited) {
      controllers_.emplace(s.id, MakeController(s.id, *s.capacity_bps, config_.controller_gain_factor));
    }
  }
}

SlotMetrics Simulation::Step() {
  if (done()) throw std::logic_error("simulation already finished");
  const int t = slot_;
  const auto& members = population_[static_cast<std::size_t>(t)];

  for (const auto& [slice_id, ids] : members) {
    for (int id : ids) {
      if (!distance_m_.contains(id)) {
        distance_m_[id] = DrawUserDistance(config_.link, config_.rng_seed, static_cast<std::uint64_t>(id));
      }
    }
  }

  // CL targets: re-seat the population, then close the loop on last slot's rates.
  for (auto& [slice_id, ctrl] : controllers_) {
    const auto& ids = members.at(slice_id);
    ctrl = OnPopulationChange(std::move(ctrl), std::set<int>(ids.begin(), ids.end()));
    if (t == 0 || ids.empty()) continue;
    std::map<int, double> achieved;
    for (int id : ids) {
      auto it = last_rate_bps_.find(id);
      achieved[id] = it != last_rate_bps_.end() ? it->second : ctrl.targets.at(id);
    }
    UpdateTargets(ctrl, achieved);
  }

  AllocationProblem problem;
  std::vector<double> distances;
  std::vector<Eigen::Index> cl_users;
  for (const auto& s : config_.slices) {
    const auto& ids = members.at(s.id);
    double fixed_target = 0.0;
    if (s.kind != SliceKind::kCapacityLimited) {
      auto ov = config_.targets_override_bps.find(s.id);
      fixed_target = ov != config_.targets_override_bps.end() ? ov->second : ClosedFormTargetRate(s);
    }
    for (int id : ids) {
      const double target =
          s.kind == SliceKind::kCapacityLimited ? controllers_.at(s.id).targets.at(id) : fixed_target;
      if (s.kind == SliceKind::kCapacityLimited) cl_users.push_back(problem.users());
      problem.targets.push_back({id, s.id, target});
      problem.beta.push_back(s.SnrGap());
      distances.push_back(distance_m_.at(id));
    }
  }
  problem.channel = SampleChannel(config_.link, distances, SlotSeed(config_.rng_seed, t));

  SlotMetrics m;
  m.slot = t;
  AllocationResult result;
  if (problem.users() > 0) {
    SolverOptions solver = config_.solver;
    Eigen::VectorXd hint(problem.users());
    for (Eigen::Index i = 0; i < problem.users(); ++i) {
      auto it = last_dual_lambda_.find(problem.targets[i].user_id);
      hint(i) = it != last_dual_lambda_.end() ? it->second : std::numeric_limits<double>::quiet_NaN();
    }
    solver.warm_start = hint;

    if (config_.admission_enabled) {
      ReadjustOptions opts;
      opts.rate_unit_bps = config_.admission_rate_unit_bps;
      opts.max_iterations = config_.admission_max_iterations;
      opts.step_rule = config_.admission_step_rule;
      opts.solver = solver;
      try {
        auto [r, report] =
            Readjust(problem, cl_users, {DbmToWatts(config_.power_budget_dbm), config_.admission_tolerance}, opts);
        result = std::move(r);
        for (std::size_t c = 0; c < report.cl_users.size(); ++c) {
          auto& target = problem.targets[report.cl_users[c]];
          target.target_rate_bps = report.final_targets[c];
          controllers_.at(target.slice_id).targets.at(target.user_id) = report.final_targets[c];
        }
        m.readjustment = std::move(report);
      } catch (const InfeasibleError& e) {
        throw InfeasibleError("slot " + std::to_string(t) + ": " + e.what(), t);
      }
    } else {
      result = Solve(problem, solver);
      if (!result.feasible) {
        std::string who;
        for (auto i : result.starved_users) who += (who.empty() ? "" : ", ") + std::to_string(problem.targets[i].user_id);
        throw InfeasibleError("slot " + std::to_string(t) + ": no subchannel for user(s) " + who, t);
      }
    }
  } else {
    result.converged = true;
  }

  last_rate_bps_.clear();
  last_dual_lambda_.clear();
  for (Eigen::Index i = 0; i < problem.users(); ++i) {
    const auto& u = problem.targets[static_cast<std::size_t>(i)];
    last_rate_bps_[u.user_id] = result.rates(i);
    last_dual_lambda_[u.user_id] = result.dual_lambda(i);
    m.users.push_back({u.user_id, u.slice_id, distances[static_cast<std::size_t>(i)], u.target_rate_bps,
                       result.rates(i), result.lambda(i), result.power.row(i).sum(),
                       result.assignment.row(i).sum()});
  }
  for (const auto& s : config_.slices) {
    SliceSlotMetrics sm;
    sm.slice_id = s.id;
    sm.kind = s.kind;
    for (const auto& u : m.users) {
      if (u.slice_id != s.id) continue;
      ++sm.users;
      sm.sum_rate_bps += u.rate_bps;
      sm.sum_target_bps += u.target_bps;
    }
    sm.mean_rate_bps = sm.users > 0 ? sm.sum_rate_bps / sm.users : 0.0;
    m.slices.push_back(sm);
  }
  m.total_power_w = result.total_power_w;
  m.converged = result.converged;
  m.dual_value_w = result.dual_value;
  m.duality_gap_w = result.duality_gap;
  m.solver_iterations = result.iterations;

  last_problem_ = std::move(problem);
  last_result_ = std::move(result);
  ++slot_;
  return m;
}

std::vector<SlotMetrics> Run(const ScenarioConfig& config) {
  Simulation sim(config);
  std::vector<SlotMetrics> out;
  out.reserve(static_cast<std::size_t>(config.num_slots));
  while (!sim.done()) out.push_back(sim.Step());
  return out;
}

}  // namespace slicealloc
