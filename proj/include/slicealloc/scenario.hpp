#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slicealloc/admission_control.hpp"
#include "slicealloc/channel_model.hpp"
#include "slicealloc/cl_controller.hpp"
#include "slicealloc/dual_allocator.hpp"
#include "slicealloc/qos_translation.hpp"

namespace slicealloc {

// Users per slice over the half-open slot range [from_slot, to_slot).
struct ScheduleSegment {
  int from_slot = 0;
  int to_slot = 0;
  std::map<std::string, int> users;
};

struct ScenarioConfig {
  std::string name;
  LinkParams link;
  std::vector<SliceSpec> slices;
  std::vector<ScheduleSegment> schedule;
  std::map<std::string, double> targets_override_bps;
  double power_budget_dbm = 23.0;
  bool admission_enabled = false;
  int num_slots = 100;
  std::uint64_t rng_seed = 1;

  double controller_gain_factor = 0.8;
  double admission_tolerance = 0.01;
  double admission_rate_unit_bps = 1e6;
  std::size_t admission_max_iterations = 200;
  StepRule admission_step_rule = StepRule::kSecant;
  SolverOptions solver;

  void Validate() const;
  const SliceSpec& Slice(const std::string& id) const;
};

struct SliceSlotMetrics {
  std::string slice_id;
  SliceKind kind = SliceKind::kCapacityLimited;
  int users = 0;
  double sum_rate_bps = 0.0;
  double mean_rate_bps = 0.0;
  double sum_target_bps = 0.0;
};

struct UserSlotRecord {
  int user_id = 0;
  std::string slice_id;
  double distance_m = 0.0;
  double target_bps = 0.0;
  double rate_bps = 0.0;
  double lambda = 0.0;
  double power_w = 0.0;
  int subchannels = 0;
};

struct SlotMetrics {
  int slot = 0;
  std::vector<SliceSlotMetrics> slices;  // config order
  std::vector<UserSlotRecord> users;
  double total_power_w = 0.0;
  std::optional<ReadjustmentReport> readjustment;
  bool converged = true;
  double dual_value_w = 0.0;
  double duality_gap_w = 0.0;
  std::size_t solver_iterations = 0;

  bool readjusted() const { return readjustment && readjustment->iterations > 0; }
  const SliceSlotMetrics& Slice(const std::string& id) const;
};

// Per-slot user ids of every slice. Ids are handed out in creation order;
// shrinking a slice retires its most recently created users first.
std::vector<std::map<std::string, std::vector<int>>> PopulationSchedule(const ScenarioConfig& config);

// Closed-loop slot driver. Step() advances one slot.
class Simulation {
 public:
  explicit Simulation(ScenarioConfig config);

  bool done() const { return slot_ >= config_.num_slots; }
  int next_slot() const { return slot_; }
  SlotMetrics Step();

  const ScenarioConfig& config() const { return config_; }
  const AllocationProblem& last_problem() const { return last_problem_; }
  const AllocationResult& last_allocation() const { return last_result_; }

 private:
  ScenarioConfig config_;
  std::vector<std::map<std::string, std::vector<int>>> population_;
  std::map<std::string, ControllerState> controllers_;
  std::map<int, double> distance_m_;
  std::map<int, double> last_rate_bps_;
  std::map<int, double> last_dual_lambda_;
  int slot_ = 0;
  AllocationProblem last_problem_;
  AllocationResult last_result_;
};

// Runs every slot. Throws InfeasibleError naming the slot on hard infeasibility.
std::vector<SlotMetrics> Run(const ScenarioConfig& config);

}  // namespace slicealloc
