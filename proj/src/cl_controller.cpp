#include "slicealloc/cl_controller.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace slicealloc {

void ControllerState::Validate() const {
  if (!(capacity_bps > 0.0)) throw std::invalid_argument("controller '" + slice_id + "': capacity must be > 0");
  if (!(gain_factor > 0.0 && gain_factor < 1.0)) {
    throw std::invalid_argument("controller '" + slice_id + "': gain factor must lie in (0, 1)");
  }
  if (!targets.empty() && !(gain > 0.0 && gain < 1.0 / static_cast<double>(targets.size()))) {
    throw std::logic_error("controller '" + slice_id + "': gain outside (0, 1/N_s)");
  }
}

ControllerState MakeController(std::string slice_id, double capacity_bps, double gain_factor) {
  ControllerState s;
  s.slice_id = std::move(slice_id);
  s.capacity_bps = capacity_bps;
  s.gain_factor = gain_factor;
  s.Validate();
  return s;
}

const std::map<int, double>& UpdateTargets(ControllerState& state, const std::map<int, double>& achieved_rates) {
  if (state.targets.empty()) return state.targets;
  if (achieved_rates.size() != state.targets.size()) {
    throw std::invalid_argument("controller '" + state.slice_id + "': rates given for " +
                                std::to_string(achieved_rates.size()) + " users, slice has " +
                                std::to_string(state.targets.size()));
  }
  double sum = 0.0;
  for (const auto& [id, r] : achieved_rates) {
    if (!state.targets.contains(id)) {
      throw std::invalid_argument("controller '" + state.slice_id + "': unknown user " + std::to_string(id));
    }
    sum += r;
  }
  state.gain = state.gain_factor / static_cast<double>(state.targets.size());
  const double shift = state.gain * (sum - state.capacity_bps);
  for (auto& [id, target] : state.targets) target = std::max(target - shift, 0.0);
  return state.targets;
}

ControllerState OnPopulationChange(ControllerState state, const std::set<int>& new_user_ids) {
  std::erase_if(state.targets, [&](const auto& kv) { return !new_user_ids.contains(kv.first); });
  if (new_user_ids.empty()) {
    state.gain = 0.0;
    return state;
  }
  const double share = state.capacity_bps / static_cast<double>(new_user_ids.size());
  for (int id : new_user_ids) state.targets.try_emplace(id, share);
  state.gain = state.gain_factor / static_cast<double>(state.targets.size());
  return state;
}

}  // namespace slicealloc
