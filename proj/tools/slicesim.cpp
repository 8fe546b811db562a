// slicesim: scenario runner for the sliced OFDMA power allocator.
//
//   slicesim simulate --config scenarios/table2.json --out runs/t2 [--seed N] [--no-admission]
//   slicesim solve-slot --config scenarios/table3.json --slot 40
//   slicesim validate-oracle --instances 100 --seed 7

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "slicealloc/errors.hpp"
#include "slicealloc/oracle.hpp"
#include "slicealloc/scenario_io.hpp"
#include "slicealloc/units.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kRuntimeError = 1,
  kParseError = 2,
  kInfeasible = 3,
  kOracleFailure = 4,
};

using namespace slicealloc;

ScenarioConfig Load(const std::string& path, std::optional<std::uint64_t> seed, bool no_admission) {
  ScenarioConfig config = LoadScenario(path);
  if (seed) config.rng_seed = *seed;
  if (no_admission) config.admission_enabled = false;
  return config;
}

int Simulate(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
             bool no_admission) {
  const ScenarioConfig config = Load(config_path, seed, no_admission);
  const auto metrics = Run(config);
  WriteMetrics(config, metrics, out_dir);
  std::size_t readjusted = 0;
  double peak_w = 0.0;
  for (const auto& m : metrics) {
    readjusted += m.readjusted() ? 1 : 0;
    peak_w = std::max(peak_w, m.total_power_w);
  }
  std::printf("%s: %zu slots, peak power %.3f dBm, %zu readjusted -> %s\n",
              config.name.empty() ? config_path.c_str() : config.name.c_str(), metrics.size(),
              WattsToDbm(peak_w), readjusted, out_dir.c_str());
  return kOk;
}

int SolveSlot(const std::string& config_path, int slot, std::optional<std::uint64_t> seed, bool no_admission) {
  const ScenarioConfig config = Load(config_path, seed, no_admission);
  if (slot < 0 || slot >= config.num_slots) {
    throw ParseError("--slot: must lie in [0, " + std::to_string(config.num_slots) + ")");
  }
  Simulation sim(config);
  SlotMetrics m;
  while (sim.next_slot() <= slot) m = sim.Step();
  std::cout << SlotToJson(m).dump(2) << "\n";
  return kOk;
}

int ValidateOracle(int instances, std::uint64_t seed) {
  oracle::OracleOptions opts;
  opts.allocation_instances = instances;
  bool ok = true;
  for (const auto& s : oracle::RunAllSuites(seed, opts)) {
    std::printf("%-4s %-40s cases=%-5d failures=%-3d worst=%.3g (%s)\n", s.passed ? "PASS" : "FAIL", s.name.c_str(),
                s.cases, s.failures, s.worst, s.unit.c_str());
    ok = ok && s.passed;
  }
  return ok ? kOk : kOracleFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sliced OFDMA power allocation simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::optional<std::uint64_t> seed;
  bool no_admission = false;
  int slot = 0;
  int instances = 100;
  std::uint64_t oracle_seed = 1;

  auto* sim = app.add_subcommand("simulate", "Run every slot and write slots.csv and run.json");
  sim->add_option("--config", config_path, "Scenario JSON (or a previous run.json)")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_option("--seed", seed, "Override rng_seed");
  sim->add_flag("--no-admission", no_admission, "Disable admission control");

  auto* solve = app.add_subcommand("solve-slot", "Run up to a slot and print its allocation as JSON");
  solve->add_option("--config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--slot", slot, "Slot index")->required();
  solve->add_option("--seed", seed, "Override rng_seed");
  solve->add_flag("--no-admission", no_admission, "Disable admission control");

  auto* val = app.add_subcommand("validate-oracle", "Check the solver against independent reference computations");
  val->add_option("--instances", instances, "Random allocation instances")->check(CLI::PositiveNumber);
  val->add_option("--seed", oracle_seed, "Seed for the random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kParseError;
  }

  try {
    if (*sim) return Simulate(config_path, out_dir, seed, no_admission);
    if (*solve) return SolveSlot(config_path, slot, seed, no_admission);
    return ValidateOracle(instances, oracle_seed);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseError;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}
