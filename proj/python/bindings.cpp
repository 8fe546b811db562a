#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "slicealloc/channel_model.hpp"
#include "slicealloc/dual_allocator.hpp"
#include "slicealloc/errors.hpp"
#include "slicealloc/oracle.hpp"
#include "slicealloc/qos_translation.hpp"
#include "slicealloc/scenario_io.hpp"

namespace py = pybind11;
using namespace slicealloc;

namespace {

py::dict SolveDense(const Eigen::MatrixXd& gains, double noise_power_w, double bandwidth_hz,
                    const std::vector<double>& targets_bps) {
  AllocationProblem p;
  p.channel.gains = gains;
  p.channel.noise_power_w = noise_power_w;
  p.channel.subchannel_bw_hz = bandwidth_hz;
  for (std::size_t i = 0; i < targets_bps.size(); ++i) p.targets.push_back({static_cast<int>(i), "", targets_bps[i]});
  AllocationResult r;
  {
    py::gil_scoped_release release;
    r = Solve(p);
  }
  py::dict out;
  out["power"] = r.power;
  out["assignment"] = r.assignment;
  out["lambda"] = r.lambda;
  out["rates"] = r.rates;
  out["total_power_w"] = r.total_power_w;
  out["dual_value"] = r.dual_value;
  out["duality_gap"] = r.duality_gap;
  out["converged"] = r.converged;
  out["feasible"] = r.feasible;
  out["iterations"] = r.iterations;
  return out;
}

// Scenario runs come back as JSON text; the Python side parses them.
std::string RunScenarioJson(const std::string& path, std::optional<std::uint64_t> seed, bool no_admission) {
  ScenarioConfig c = LoadScenario(path);
  if (seed) c.rng_seed = *seed;
  if (no_admission) c.admission_enabled = false;
  nlohmann::json slots = nlohmann::json::array();
  {
    py::gil_scoped_release release;
    for (const auto& m : Run(c)) slots.push_back(SlotToJson(m));
  }
  return nlohmann::json{{"config", ScenarioToJson(c)}, {"slots", std::move(slots)}}.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sliced OFDMA power allocation core";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);

  m.def("urllc_target_rate", &UrllcTargetRate, py::arg("arrival_bps"), py::arg("reliability"),
        py::arg("delay_max_s"), py::arg("jitter_s"));
  m.def("ts_target_rate", &TsTargetRate, py::arg("packet_bits"), py::arg("sched_period_s"));
  m.def("delay_outage_probability", &DelayOutageProbability, py::arg("rate_bps"), py::arg("arrival_bps"),
        py::arg("delay_max_s"));
  m.def("path_loss_inf_dl", &PathLossInfDl, py::arg("distance_m"), py::arg("carrier_ghz"));
  m.def("path_loss_nlos", &PathLossNlos, py::arg("distance_m"), py::arg("carrier_ghz"));
  m.def(
      "water_fill",
      [](double target_bps, const std::vector<double>& inverse_gains, double bandwidth_hz) {
        const WaterFillResult w = WaterFill(target_bps, inverse_gains, bandwidth_hz);
        return py::make_tuple(w.lambda, w.power);
      },
      py::arg("target_bps"), py::arg("inverse_gains"), py::arg("bandwidth_hz"),
      "Returns (lambda, powers) for one user over a fixed subchannel set.");
  m.def("solve", &SolveDense, py::arg("gains"), py::arg("noise_power_w"), py::arg("bandwidth_hz"),
        py::arg("targets_bps"), "Minimum-power allocation for a users x subchannels gain matrix.");
  m.def(
      "brute_force_power",
      [](const Eigen::MatrixXd& gains, double noise_power_w, double bandwidth_hz,
         const std::vector<double>& targets_bps) {
        AllocationProblem p;
        p.channel = {gains, noise_power_w, bandwidth_hz};
        for (std::size_t i = 0; i < targets_bps.size(); ++i) p.targets.push_back({static_cast<int>(i), "", targets_bps[i]});
        const auto r = oracle::BruteForceAllocation(p);
        return py::make_tuple(r.feasible, r.total_power_w);
      },
      py::arg("gains"), py::arg("noise_power_w"), py::arg("bandwidth_hz"), py::arg("targets_bps"),
      "Exhaustive-search reference: returns (feasible, total_power_w).");
  m.def("_run_scenario_json", &RunScenarioJson, py::arg("path"), py::arg("seed") = py::none(),
        py::arg("no_admission") = false);
}
