#include "slicealloc/scenario_io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "slicealloc/errors.hpp"
#include "slicealloc/units.hpp"

namespace slicealloc {
namespace {

using nlohmann::json;

// Reads one JSON object, tracking which keys were consumed so leftovers can be
// reported as unknown fields.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ParseError(Where() + ": expected an object");
  }

  bool Has(const std::string& key) const { return obj_.contains(key); }

  const json& Raw(const std::string& key) {
    seen_.insert(key);
    if (!obj_.contains(key)) throw ParseError(Field(key) + ": missing required field");
    return obj_.at(key);
  }

  double Number(const std::string& key) {
    const json& v = Raw(key);
    if (!v.is_number()) throw ParseError(Field(key) + ": expected a number");
    return v.get<double>();
  }
  double Positive(const std::string& key) {
    const double v = Number(key);
    if (!(v > 0.0)) throw ParseError(Field(key) + ": must be > 0, got " + Fmt(v));
    return v;
  }
  double NonNegative(const std::string& key) {
    const double v = Number(key);
    if (!(v >= 0.0)) throw ParseError(Field(key) + ": must be >= 0, got " + Fmt(v));
    return v;
  }
  long long Integer(const std::string& key) {
    const json& v = Raw(key);
    if (!v.is_number_integer()) throw ParseError(Field(key) + ": expected an integer");
    return v.get<long long>();
  }
  bool Bool(const std::string& key) {
    const json& v = Raw(key);
    if (!v.is_boolean()) throw ParseError(Field(key) + ": expected true or false");
    return v.get<bool>();
  }
  std::string String(const std::string& key) {
    const json& v = Raw(key);
    if (!v.is_string()) throw ParseError(Field(key) + ": expected a string");
    return v.get<std::string>();
  }

  template <typename T, typename F>
  T Optional(const std::string& key, T fallback, F&& read) {
    return Has(key) ? read(key) : fallback;
  }

  void Finish() const {
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.contains(key)) throw ParseError(Field(key) + ": unknown field");
    }
  }

  std::string Field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string Where() const { return path_.empty() ? "<root>" : path_; }

 private:
  static std::string Fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

LinkParams ReadLink(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  LinkParams l;
  l.carrier_freq_ghz = r.Positive("carrier_freq_ghz");
  l.tx_antenna_gain_dbi = r.Number("tx_antenna_gain_dbi");
  l.rx_antenna_gain_dbi = r.Number("rx_antenna_gain_dbi");
  l.noise_psd_dbm_hz = r.Number("noise_psd_dbm_hz");
  l.subchannel_bw_hz = r.Positive("subchannel_bw_hz");
  const auto k = r.Integer("num_subchannels");
  if (k < 1) throw ParseError(r.Field("num_subchannels") + ": must be >= 1");
  l.num_subchannels = static_cast<int>(k);
  l.cell_radius_m = r.Number("cell_radius_m");
  if (!(l.cell_radius_m >= 1.0 && l.cell_radius_m <= 100.0)) {
    throw ParseError(r.Field("cell_radius_m") + ": must lie in [1, 100] m");
  }
  l.shadow_sigma_db = r.NonNegative("shadow_sigma_db");
  l.interference_margin_db = r.Optional("interference_margin_db", 0.0, [&](auto& key) { return r.NonNegative(key); });
  r.Finish();
  return l;
}

SliceSpec ReadSlice(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  SliceSpec s;
  s.id = r.String("id");
  try {
    s.kind = SliceKindFromString(r.String("kind"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(r.Field("kind") + ": " + e.what());
  }
  switch (s.kind) {
    case SliceKind::kCapacityLimited:
      s.capacity_bps = MbpsToBps(r.Positive("capacity_mbps"));
      break;
    case SliceKind::kUrllc: {
      s.arrival_rate_bps = MbpsToBps(r.NonNegative("arrival_rate_mbps"));
      const double gamma = r.Number("reliability");
      if (!(gamma > 0.0 && gamma < 1.0)) throw ParseError(r.Field("reliability") + ": must lie in (0, 1)");
      s.reliability = gamma;
      s.delay_max_s = r.Positive("delay_max_ms") * 1e-3;
      s.jitter_s = r.Positive("jitter_ms") * 1e-3;
      break;
    }
    case SliceKind::kTimeSensitive:
      s.packet_bits = r.Positive("packet_bits");
      s.sched_period_s = r.Positive("sched_period_ms") * 1e-3;
      break;
  }
  if (r.Has("ber")) {
    const double ber = r.Number("ber");
    if (!(ber > 0.0 && ber < 0.2)) throw ParseError(r.Field("ber") + ": must lie in (0, 0.2)");
    s.ber = ber;
  }
  r.Finish();
  return s;
}

ScheduleSegment ReadSegment(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  ScheduleSegment seg;
  seg.from_slot = static_cast<int>(r.Integer("from_slot"));
  seg.to_slot = static_cast<int>(r.Integer("to_slot"));
  const json& users = r.Raw("users");
  if (!users.is_object()) throw ParseError(r.Field("users") + ": expected an object of slice id -> count");
  for (const auto& [id, count] : users.items()) {
    if (!count.is_number_integer() || count.get<long long>() < 0) {
      throw ParseError(r.Field("users") + "." + id + ": expected a nonnegative integer");
    }
    seg.users[id] = count.get<int>();
  }
  r.Finish();
  return seg;
}

}  // namespace

ScenarioConfig ScenarioFromJson(const json& doc) {
  ObjectReader r(doc, "");
  ScenarioConfig c;
  c.name = r.Optional("name", std::string{}, [&](auto& key) { return r.String(key); });
  const auto slots = r.Integer("num_slots");
  if (slots < 0) throw ParseError("num_slots: must be >= 0");
  c.num_slots = static_cast<int>(slots);
  const auto seed = r.Integer("rng_seed");
  if (seed < 0) throw ParseError("rng_seed: must be >= 0");
  c.rng_seed = static_cast<std::uint64_t>(seed);
  c.power_budget_dbm = r.Number("power_budget_dbm");
  c.admission_enabled = r.Bool("admission_enabled");
  c.link = ReadLink(r.Raw("link"), "link");

  const json& slices = r.Raw("slices");
  if (!slices.is_array()) throw ParseError("slices: expected an array");
  for (std::size_t i = 0; i < slices.size(); ++i) {
    c.slices.push_back(ReadSlice(slices[i], "slices[" + std::to_string(i) + "]"));
  }
  const json& schedule = r.Raw("schedule");
  if (!schedule.is_array()) throw ParseError("schedule: expected an array");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    c.schedule.push_back(ReadSegment(schedule[i], "schedule[" + std::to_string(i) + "]"));
  }

  if (r.Has("targets_override_mbps")) {
    const json& ov = r.Raw("targets_override_mbps");
    if (!ov.is_object()) throw ParseError("targets_override_mbps: expected an object");
    for (const auto& [id, v] : ov.items()) {
      if (!v.is_number() || !(v.get<double>() >= 0.0)) {
        throw ParseError("targets_override_mbps." + id + ": must be a number >= 0");
      }
      c.targets_override_bps[id] = MbpsToBps(v.get<double>());
    }
  }
  if (r.Has("controller")) {
    ObjectReader cr(r.Raw("controller"), "controller");
    c.controller_gain_factor = cr.Optional("gain_factor", c.controller_gain_factor, [&](auto& k) { return cr.Positive(k); });
    cr.Finish();
  }
  if (r.Has("admission")) {
    ObjectReader ar(r.Raw("admission"), "admission");
    c.admission_tolerance = ar.Optional("tolerance", c.admission_tolerance, [&](auto& k) { return ar.Positive(k); });
    c.admission_rate_unit_bps =
        ar.Optional("rate_unit_bps", c.admission_rate_unit_bps, [&](auto& k) { return ar.Positive(k); });
    c.admission_max_iterations = ar.Optional("max_iterations", c.admission_max_iterations, [&](auto& k) {
      const auto v = ar.Integer(k);
      if (v < 1) throw ParseError(ar.Field(k) + ": must be >= 1");
      return static_cast<std::size_t>(v);
    });
    if (ar.Has("step_rule")) {
      try {
        c.admission_step_rule = StepRuleFromString(ar.String("step_rule"));
      } catch (const std::invalid_argument& e) {
        throw ParseError(ar.Field("step_rule") + ": " + e.what());
      }
    }
    ar.Finish();
  }
  if (r.Has("solver")) {
    ObjectReader sr(r.Raw("solver"), "solver");
    c.solver.rel_tolerance = sr.Optional("rel_tolerance", c.solver.rel_tolerance, [&](auto& k) { return sr.Positive(k); });
    c.solver.gap_tolerance = sr.Optional("gap_tolerance", c.solver.gap_tolerance, [&](auto& k) { return sr.Positive(k); });
    c.solver.max_iterations = sr.Optional("max_iterations", c.solver.max_iterations, [&](auto& k) {
      const auto v = sr.Integer(k);
      if (v < 0) throw ParseError(sr.Field(k) + ": must be >= 0");
      return static_cast<std::size_t>(v);
    });
    c.solver.polish_passes = sr.Optional("polish_passes", c.solver.polish_passes, [&](auto& k) {
      const auto v = sr.Integer(k);
      if (v < 0) throw ParseError(sr.Field(k) + ": must be >= 0");
      return static_cast<int>(v);
    });
    sr.Finish();
  }
  r.Finish();

  try {
    c.Validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  return c;
}

ScenarioConfig LoadScenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("config") && doc.contains("slots")) return ScenarioFromJson(doc.at("config"));
  return ScenarioFromJson(doc);
}

json ScenarioToJson(const ScenarioConfig& c) {
  json link = {{"carrier_freq_ghz", c.link.carrier_freq_ghz},
               {"tx_antenna_gain_dbi", c.link.tx_antenna_gain_dbi},
               {"rx_antenna_gain_dbi", c.link.rx_antenna_gain_dbi},
               {"noise_psd_dbm_hz", c.link.noise_psd_dbm_hz},
               {"subchannel_bw_hz", c.link.subchannel_bw_hz},
               {"num_subchannels", c.link.num_subchannels},
               {"cell_radius_m", c.link.cell_radius_m},
               {"shadow_sigma_db", c.link.shadow_sigma_db},
               {"interference_margin_db", c.link.interference_margin_db}};
  json slices = json::array();
  for (const auto& s : c.slices) {
    json js = {{"id", s.id}, {"kind", ToString(s.kind)}};
    switch (s.kind) {
      case SliceKind::kCapacityLimited:
        js["capacity_mbps"] = BpsToMbps(*s.capacity_bps);
        break;
      case SliceKind::kUrllc:
        js["arrival_rate_mbps"] = BpsToMbps(*s.arrival_rate_bps);
        js["reliability"] = *s.reliability;
        js["delay_max_ms"] = *s.delay_max_s * 1e3;
        js["jitter_ms"] = *s.jitter_s * 1e3;
        break;
      case SliceKind::kTimeSensitive:
        js["packet_bits"] = *s.packet_bits;
        js["sched_period_ms"] = *s.sched_period_s * 1e3;
        break;
    }
    if (s.ber) js["ber"] = *s.ber;
    slices.push_back(js);
  }
  json schedule = json::array();
  for (const auto& seg : c.schedule) {
    schedule.push_back({{"from_slot", seg.from_slot}, {"to_slot", seg.to_slot}, {"users", seg.users}});
  }
  json doc = {{"name", c.name},
              {"num_slots", c.num_slots},
              {"rng_seed", c.rng_seed},
              {"power_budget_dbm", c.power_budget_dbm},
              {"admission_enabled", c.admission_enabled},
              {"link", link},
              {"slices", slices},
              {"schedule", schedule},
              {"controller", {{"gain_factor", c.controller_gain_factor}}},
              {"admission",
               {{"tolerance", c.admission_tolerance},
                {"rate_unit_bps", c.admission_rate_unit_bps},
                {"max_iterations", c.admission_max_iterations},
                {"step_rule", ToString(c.admission_step_rule)}}},
              {"solver",
               {{"rel_tolerance", c.solver.rel_tolerance},
                {"gap_tolerance", c.solver.gap_tolerance},
                {"max_iterations", c.solver.max_iterations},
                {"polish_passes", c.solver.polish_passes}}}};
  if (!c.targets_override_bps.empty()) {
    json ov = json::object();
    for (const auto& [id, v] : c.targets_override_bps) ov[id] = BpsToMbps(v);
    doc["targets_override_mbps"] = ov;
  }
  return doc;
}

json SlotToJson(const SlotMetrics& m) {
  json slices = json::array();
  for (const auto& s : m.slices) {
    slices.push_back({{"slice_id", s.slice_id},
                      {"kind", ToString(s.kind)},
                      {"users", s.users},
                      {"sum_rate_mbps", BpsToMbps(s.sum_rate_bps)},
                      {"mean_rate_mbps", BpsToMbps(s.mean_rate_bps)},
                      {"sum_target_mbps", BpsToMbps(s.sum_target_bps)}});
  }
  json users = json::array();
  for (const auto& u : m.users) {
    users.push_back({{"user_id", u.user_id},
                     {"slice_id", u.slice_id},
                     {"distance_m", u.distance_m},
                     {"target_mbps", BpsToMbps(u.target_bps)},
                     {"rate_mbps", BpsToMbps(u.rate_bps)},
                     {"lambda", u.lambda},
                     {"power_w", u.power_w},
                     {"subchannels", u.subchannels}});
  }
  json readjust = nullptr;
  if (m.readjustment) {
    const auto& r = *m.readjustment;
    std::vector<double> orig, fin;
    for (double v : r.original_targets) orig.push_back(BpsToMbps(v));
    for (double v : r.final_targets) fin.push_back(BpsToMbps(v));
    readjust = {{"iterations", r.iterations},
                {"initial_p_opt", r.initial_p_opt},
                {"final_p_opt", r.final_p_opt},
                {"original_targets_mbps", orig},
                {"final_targets_mbps", fin},
                {"reduced_users", r.reduced_users.size()},
                {"hit_iteration_cap", r.hit_iteration_cap}};
  }
  const double dbm = WattsToDbm(m.total_power_w);
  return {{"slot", m.slot},
          {"total_power_w", m.total_power_w},
          {"total_power_dbm", std::isfinite(dbm) ? json(dbm) : json(nullptr)},
          {"converged", m.converged},
          {"dual_value_w", m.dual_value_w},
          {"duality_gap_w", m.duality_gap_w},
          {"solver_iterations", m.solver_iterations},
          {"readjusted", m.readjusted()},
          {"readjustment", readjust},
          {"slices", slices},
          {"users", users}};
}

void WriteSlotsCsv(const std::vector<SlotMetrics>& metrics, std::ostream& out) {
  out << "slot,slice_id,sum_rate_mbps,mean_rate_mbps,total_power_dbm,readjusted_flag\n";
  char buf[256];
  for (const auto& m : metrics) {
    const double dbm = WattsToDbm(m.total_power_w);
    for (const auto& s : m.slices) {
      std::snprintf(buf, sizeof buf, "%d,%s,%.6g,%.6g,%.6g,%d\n", m.slot, s.slice_id.c_str(),
                    BpsToMbps(s.sum_rate_bps), BpsToMbps(s.mean_rate_bps), dbm, m.readjusted() ? 1 : 0);
      out << buf;
    }
  }
}

void WriteMetrics(const ScenarioConfig& config, const std::vector<SlotMetrics>& metrics,
                  const std::filesystem::path& output_dir) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw std::runtime_error(output_dir.string() + ": " + ec.message());

  const auto csv_path = output_dir / "slots.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error(csv_path.string() + ": cannot open for writing");
  WriteSlotsCsv(metrics, csv);
  if (!csv) throw std::runtime_error(csv_path.string() + ": write failed");

  json slots = json::array();
  for (const auto& m : metrics) slots.push_back(SlotToJson(m));
  const json run = {{"config", ScenarioToJson(config)}, {"seed", config.rng_seed}, {"slots", slots}};
  const auto json_path = output_dir / "run.json";
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error(json_path.string() + ": cannot open for writing");
  js << run.dump(1) << '\n';
  if (!js) throw std::runtime_error(json_path.string() + ": write failed");
}

}  // namespace slicealloc
