#pragma once

#include <filesystem>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "slicealloc/scenario.hpp"

namespace slicealloc {

// Strict schema: unknown keys, missing keys and out-of-range values raise
// ParseError naming the offending field path (e.g. "slices[1].jitter_ms").
ScenarioConfig ScenarioFromJson(const nlohmann::json& doc);

// Accepts a scenario file or a run.json written by WriteMetrics (its "config" block).
ScenarioConfig LoadScenario(const std::filesystem::path& path);

nlohmann::json ScenarioToJson(const ScenarioConfig& config);
nlohmann::json SlotToJson(const SlotMetrics& slot);

// Columns: slot,slice_id,sum_rate_mbps,mean_rate_mbps,total_power_dbm,readjusted_flag
void WriteSlotsCsv(const std::vector<SlotMetrics>& metrics, std::ostream& out);

// Writes <dir>/slots.csv and <dir>/run.json, creating the directory if needed.
void WriteMetrics(const ScenarioConfig& config, const std::vector<SlotMetrics>& metrics,
                  const std::filesystem::path& output_dir);

}  // namespace slicealloc
