#include "slicealloc/qos_translation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "slicealloc/rng.hpp"

namespace slicealloc {

std::string ToString(SliceKind kind) {
  switch (kind) {
    case SliceKind::kCapacityLimited: return "CL";
    case SliceKind::kUrllc: return "URLLC";
    case SliceKind::kTimeSensitive: return "TS";
  }
  return "?";
}

SliceKind SliceKindFromString(const std::string& s) {
  if (s == "CL") return SliceKind::kCapacityLimited;
  if (s == "URLLC") return SliceKind::kUrllc;
  if (s == "TS") return SliceKind::kTimeSensitive;
  throw std::invalid_argument("unknown slice kind '" + s + "' (expected CL, URLLC or TS)");
}

namespace {

void RequirePositive(const std::optional<double>& v, const std::string& slice, const char* name) {
  if (!v) throw std::invalid_argument("slice '" + slice + "': missing " + name);
  if (!(*v > 0.0)) throw std::invalid_argument("slice '" + slice + "': " + name + " must be > 0");
}

void RequireUnset(const std::optional<double>& v, const std::string& slice, const char* name) {
  if (v) throw std::invalid_argument("slice '" + slice + "': field " + name + " does not apply to this kind");
}

}  // namespace

void SliceSpec::Validate() const {
  switch (kind) {
    case SliceKind::kCapacityLimited:
      RequirePositive(capacity_bps, id, "capacity");
      for (auto* f : {&delay_max_s, &reliability, &jitter_s, &arrival_rate_bps, &packet_bits, &sched_period_s}) {
        RequireUnset(*f, id, "URLLC/TS parameter");
      }
      break;
    case SliceKind::kUrllc:
      RequirePositive(delay_max_s, id, "delay_max");
      RequirePositive(jitter_s, id, "jitter");
      if (!reliability) throw std::invalid_argument("slice '" + id + "': missing reliability");
      if (!(*reliability > 0.0 && *reliability < 1.0)) {
        throw std::invalid_argument("slice '" + id + "': reliability must lie in (0, 1)");
      }
      if (!arrival_rate_bps || !(*arrival_rate_bps >= 0.0)) {
        throw std::invalid_argument("slice '" + id + "': arrival rate must be >= 0");
      }
      for (auto* f : {&capacity_bps, &packet_bits, &sched_period_s}) RequireUnset(*f, id, "CL/TS parameter");
      break;
    case SliceKind::kTimeSensitive:
      RequirePositive(packet_bits, id, "packet_bits");
      RequirePositive(sched_period_s, id, "sched_period");
      for (auto* f : {&capacity_bps, &delay_max_s, &reliability, &jitter_s, &arrival_rate_bps}) {
        RequireUnset(*f, id, "CL/URLLC parameter");
      }
      break;
  }
  if (ber && !(*ber > 0.0 && *ber < 0.2)) {
    throw std::invalid_argument("slice '" + id + "': ber must lie in (0, 0.2)");
  }
}

double SliceSpec::SnrGap() const { return ber ? SnrGapFromBer(*ber) : 1.0; }

double UrllcTargetRate(double a_bps, double gamma, double d_max_s, double jitter_s) {
  if (gamma >= 1.0) throw std::domain_error("urllc target rate: reliability 1 needs an infinite rate");
  if (!(gamma > 0.0)) throw std::domain_error("urllc target rate: reliability must be > 0");
  if (!(d_max_s > 0.0) || !(jitter_s > 0.0)) throw std::domain_error("urllc target rate: delay and jitter must be > 0");
  if (!(a_bps >= 0.0)) throw std::domain_error("urllc target rate: arrival rate must be >= 0");
  const double delay_term = -std::log1p(-gamma) / d_max_s;
  return a_bps + std::max(1.0 / jitter_s, delay_term);
}

double TsTargetRate(double packet_bits, double sched_period_s) {
  if (!(sched_period_s > 0.0)) throw std::domain_error("ts target rate: scheduling period must be > 0");
  if (!(packet_bits >= 0.0)) throw std::domain_error("ts target rate: packet size must be >= 0");
  return packet_bits / sched_period_s;
}

double DelayOutageProbability(double rate_bps, double arrival_bps, double d_max_s) {
  if (rate_bps <= arrival_bps) return 1.0;
  return std::exp(-(rate_bps - arrival_bps) * d_max_s);
}

double SnrGapFromBer(double ber) {
  if (!(ber > 0.0 && ber < 0.2)) throw std::domain_error("snr gap: ber must lie in (0, 0.2)");
  return 1.5 / -std::log(5.0 * ber);
}

double ClosedFormTargetRate(const SliceSpec& slice) {
  switch (slice.kind) {
    case SliceKind::kUrllc:
      return UrllcTargetRate(*slice.arrival_rate_bps, *slice.reliability, *slice.delay_max_s, *slice.jitter_s);
    case SliceKind::kTimeSensitive:
      return TsTargetRate(*slice.packet_bits, *slice.sched_period_s);
    case SliceKind::kCapacityLimited:
      break;
  }
  throw std::invalid_argument("slice '" + slice.id + "': CL targets come from the capacity controller");
}

double SimulateMm1DelayTail(double arrival_bps, double service_bps, double d_max_s,
                            std::uint64_t num_packets, std::uint64_t rng_seed, TailEstimator estimator) {
  if (arrival_bps == 0.0 || num_packets == 0) return 0.0;
  if (!(arrival_bps > 0.0) || !(service_bps > arrival_bps)) {
    throw std::domain_error("mm1: need 0 <= arrival < service for a stable queue");
  }
  auto gen = MakeStream(rng_seed, {0x3311ull});
  std::exponential_distribution<double> interarrival(arrival_bps);
  std::exponential_distribution<double> service(service_bps);

  // Lindley recursion on the waiting time of consecutive packets.
  double wait = 0.0;
  double late = 0.0;
  for (std::uint64_t n = 0; n < num_packets; ++n) {
    const double s = service(gen);
    const double sojourn = wait + s;
    if (estimator == TailEstimator::kCount) {
      late += sojourn > d_max_s ? 1.0 : 0.0;
    } else {
      // The service draw is exponential, so its tail beyond the remaining slack is known exactly.
      late += wait >= d_max_s ? 1.0 : std::exp(-service_bps * (d_max_s - wait));
    }
    wait = std::max(0.0, sojourn - interarrival(gen));
  }
  return late / static_cast<double>(num_packets);
}

}  // namespace slicealloc
