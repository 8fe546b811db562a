#pragma once

#include <map>
#include <set>
#include <string>

namespace slicealloc {

// Integral-style loop that steers a CL slice's sum rate to its capacity by
// shifting every member's target by the same amount.
struct ControllerState {
  std::string slice_id;
  double capacity_bps = 0.0;
  // k = gain_factor / N_s; must stay in (0, 1).
  double gain_factor = 0.8;
  double gain = 0.0;
  std::map<int, double> targets;  // user id -> r_o,i (bps)

  std::size_t users() const { return targets.size(); }
  void Validate() const;
};

ControllerState MakeController(std::string slice_id, double capacity_bps, double gain_factor = 0.8);

// r_o,i(t) = max(r_o,i(t-1) - k (sum_i r_i(t-1) - C_s), 0).
// `achieved_rates` must cover exactly the current members.
const std::map<int, double>& UpdateTargets(ControllerState& state, const std::map<int, double>& achieved_rates);

// Drops departed users, starts arrivals at C_s / N_s and re-derives k.
ControllerState OnPopulationChange(ControllerState state, const std::set<int>& new_user_ids);

}  // namespace slicealloc
