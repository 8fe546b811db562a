#pragma once

#include <cmath>
#include <limits>

namespace slicealloc {

inline constexpr double kBitsPerMbit = 1e6;

inline double DbmToWatts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

inline double WattsToDbm(double watts) {
  if (watts <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(watts * 1e3);
}

inline double DbToLinear(double db) { return std::pow(10.0, db / 10.0); }

inline double MbpsToBps(double mbps) { return mbps * kBitsPerMbit; }
inline double BpsToMbps(double bps) { return bps / kBitsPerMbit; }

}  // namespace slicealloc
