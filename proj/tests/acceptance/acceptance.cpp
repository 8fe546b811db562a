// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Per-instance allocator results go to
// acceptance_allocator.csv in the working directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "slicealloc/channel_model.hpp"
#include "slicealloc/oracle.hpp"
#include "slicealloc/qos_translation.hpp"
#include "slicealloc/scenario.hpp"
#include "slicealloc/scenario_io.hpp"
#include "slicealloc/units.hpp"

namespace {

using namespace slicealloc;
namespace fs = std::filesystem;

const fs::path kSource = SLICEALLOC_SOURCE_DIR;
constexpr std::uint64_t kOracleSeed = 20240601;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

int failures = 0;

void Report(int id, const std::string& name, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Slot ranges [from, to) of each schedule segment.
std::vector<std::pair<int, int>> Segments(const ScenarioConfig& c) {
  std::vector<std::pair<int, int>> out;
  for (const auto& s : c.schedule) out.emplace_back(s.from_slot, std::min(s.to_slot, c.num_slots));
  return out;
}

std::string CsvBytes(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome QosExactness() {
  const double r = UrllcTargetRate(2e6, 0.999, 0.010, 0.001);
  const double rel = std::abs(r - 2.001e6) / 2.001e6;
  return {rel <= 1e-9, Format("urllc target %.9f Mbps, relative error %.2e", r / 1e6, rel)};
}

Outcome PathLoss() {
  const double pl = PathLossInfDl(100.0, 3.7);
  return {std::abs(pl - 101.36) <= 0.01, Format("PL_DL(100 m, 3.7 GHz) = %.4f dB", pl)};
}

Outcome OptimizerVsOracle() {
  std::mt19937_64 gen(kOracleSeed);
  std::ofstream csv("acceptance_allocator.csv");
  csv << "instance,users,subchannels,oracle_feasible,power_w,oracle_power_w,relative_excess,duality_gap_w,converged\n";
  int compared = 0, infeasible_agree = 0, bad = 0, draws = 0;
  double worst = 0.0, worst_gap = 0.0;
  while (compared < 100) {
    const int users = 1 + static_cast<int>(gen() % 3);
    const int subchannels = 2 + static_cast<int>(gen() % 3);
    const AllocationProblem p = oracle::RandomInstance(gen, users, subchannels);
    const auto ref = oracle::BruteForceAllocation(p);
    const AllocationResult got = Solve(p);
    double dev = 0.0;
    if (!ref.feasible) {
      if (got.feasible) ++bad;
      else ++infeasible_agree;
    } else if (ref.total_power_w > 0.0) {
      dev = (got.total_power_w - ref.total_power_w) / ref.total_power_w;
      ++compared;
      if (!got.feasible || !got.converged || dev > 0.02 || dev < -1e-6) ++bad;
      worst = std::max(worst, dev);
      worst_gap = std::max(worst_gap, got.duality_gap / got.total_power_w);
    }
    csv << draws << ',' << users << ',' << subchannels << ',' << ref.feasible << ',' << got.total_power_w << ','
        << ref.total_power_w << ',' << dev << ',' << got.duality_gap << ',' << got.converged << '\n';
    ++draws;
  }
  return {bad == 0, Format("%d feasible instances, %d infeasible agreed, %d failures, worst excess %.3g%%, "
                           "worst relative duality gap %.3g%%",
                           compared, infeasible_agree, bad, 100.0 * worst, 100.0 * worst_gap)};
}

Outcome Suite(const oracle::SuiteResult& s) {
  return {s.passed, Format("%d cases, %d failures, worst %.3g (%s)", s.cases, s.failures, s.worst, s.unit.c_str())};
}

struct Series {
  ScenarioConfig config;
  std::vector<SlotMetrics> metrics;
};

Series RunScenario(const std::string& file, bool admission) {
  Series s{LoadScenario(kSource / "scenarios" / file), {}};
  s.config.admission_enabled = admission;
  s.metrics = Run(s.config);
  return s;
}

Outcome TableTwo(const Series& t2) {
  const auto& m = t2.metrics;
  auto excluded = [](int t) { return (t >= 33 && t < 38) || (t >= 67 && t < 72); };
  double worst_cl = 0.0, worst_urllc = 0.0, worst_ts = 0.0;
  for (int t = 30; t < static_cast<int>(m.size()); ++t) {
    if (excluded(t)) continue;
    const auto& slot = m[static_cast<std::size_t>(t)];
    worst_cl = std::max(worst_cl, std::abs(slot.Slice("cl").sum_rate_bps - 27e6) / 27e6);
    worst_urllc = std::max(worst_urllc, std::abs(slot.Slice("urllc").mean_rate_bps - 2.001e6) / 2.001e6);
    worst_ts = std::max(worst_ts, std::abs(slot.Slice("ts").sum_rate_bps - 1.64e6) / 1.64e6);
  }
  double worst_step = 0.0;
  for (int t : {33, 67}) {
    const auto& a = m[static_cast<std::size_t>(t - 1)];
    const auto& b = m[static_cast<std::size_t>(t)];
    for (const char* id : {"urllc", "ts"}) {
      const double before = a.Slice(id).mean_rate_bps;
      worst_step = std::max(worst_step, std::abs(b.Slice(id).mean_rate_bps - before) / before);
    }
  }
  const bool pass = worst_cl <= 0.01 && worst_urllc <= 1e-3 && worst_ts <= 1e-3 && worst_step < 1e-3;
  return {pass, Format("worst deviation CL %.3g%%, URLLC %.3g%%, TS %.3g%%; URLLC/TS step across changes %.3g%%",
                       100 * worst_cl, 100 * worst_urllc, 100 * worst_ts, 100 * worst_step)};
}

Outcome TableThreeOpen(const Series& t3) {
  bool pass = true;
  std::string detail = "segment mean power";
  int at_or_below = 0;
  for (auto [from, to] : Segments(t3.config)) {
    std::vector<double> w;
    for (int t = from; t < to; ++t) {
      const double p = t3.metrics[static_cast<std::size_t>(t)].total_power_w;
      w.push_back(p);
      if (WattsToDbm(p) <= 23.0) ++at_or_below;
    }
    const double dbm = WattsToDbm(Mean(w));
    pass = pass && dbm > 23.0;
    detail += Format(" [%d,%d) %.2f dBm", from, to, dbm);
  }
  detail += Format("; %d of %zu single slots at or below 23 dBm", at_or_below, t3.metrics.size());
  return {pass, detail};
}

Outcome TableThreeAdmission(const Series& t3) {
  const double eps = t3.config.admission_tolerance;
  const double cap_w = DbmToWatts(t3.config.power_budget_dbm) * (1.0 + eps);
  double peak = 0.0, worst_urllc = 0.0, worst_ts = 0.0;
  for (const auto& m : t3.metrics) {
    peak = std::max(peak, m.total_power_w);
    worst_urllc = std::max(worst_urllc, std::abs(m.Slice("urllc").sum_rate_bps - 80e6) / 80e6);
    worst_ts = std::max(worst_ts, std::abs(m.Slice("ts").sum_rate_bps - 3.28e6) / 3.28e6);
  }
  bool pass = peak <= cap_w * (1.0 + 1e-12) && worst_urllc <= 1e-6 && worst_ts <= 1e-6;
  std::string detail = Format("peak %.3f dBm (limit %.3f); URLLC sum dev %.2g, TS sum dev %.2g; CL reduction",
                              WattsToDbm(peak), WattsToDbm(cap_w), worst_urllc, worst_ts);
  std::vector<double> reduction;
  for (auto [from, to] : Segments(t3.config)) {
    std::vector<double> sums;
    for (int t = from; t < to; ++t) sums.push_back(t3.metrics[static_cast<std::size_t>(t)].Slice("cl").sum_rate_bps);
    const double mean = Mean(sums);
    pass = pass && mean < 270e6;
    reduction.push_back(270e6 - mean);
    detail += Format(" [%d,%d) %.2f Mbps", from, to, (270e6 - mean) / 1e6);
  }
  const bool ordered = reduction.size() == 3 && reduction[2] > reduction[0] && reduction[0] > reduction[1];
  detail += ordered ? "; ordering seg3 > seg1 > seg2 holds" : "; ordering seg3 > seg1 > seg2 does not hold";
  return {pass && ordered, detail};
}

Outcome Determinism(const Series& t2) {
  const fs::path base = fs::temp_directory_path() / "slicealloc_acceptance";
  fs::remove_all(base);
  WriteMetrics(t2.config, t2.metrics, base / "a");
  WriteMetrics(t2.config, Run(t2.config), base / "b");
  const std::string a = CsvBytes(base / "a" / "slots.csv");
  const std::string b = CsvBytes(base / "b" / "slots.csv");
  fs::remove_all(base);
  return {!a.empty() && a == b, Format("two Table II runs, slots.csv %zu bytes, identical: %s", a.size(),
                                       a == b ? "yes" : "no")};
}

}  // namespace

int main() {
  Report(1, "QoS translation exactness", QosExactness);
  Report(2, "path loss", PathLoss);
  Report(3, "optimizer vs exhaustive oracle", OptimizerVsOracle);
  Report(4, "subchannel price grid argmin", [] { return Suite(oracle::SubchannelPriceSuite(kOracleSeed + 1, 1000)); });
  Report(5, "subgradient vs finite differences", [] { return Suite(oracle::SubgradientSuite(kOracleSeed + 2, 100)); });
  Report(6, "M/M/1 delay tail", [] { return Suite(oracle::Mm1Suite(kOracleSeed + 3, 1'000'000)); });

  Series t2;
  Report(7, "Table II reproduction", [&] {
    t2 = RunScenario("table2.json", false);
    return TableTwo(t2);
  });
  Report(8, "Table III without admission", [] { return TableThreeOpen(RunScenario("table3.json", false)); });
  Report(9, "Table III with admission", [] { return TableThreeAdmission(RunScenario("table3.json", true)); });
  Report(10, "determinism", [&] { return Determinism(t2); });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
