#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace slicealloc {

enum class SliceKind { kCapacityLimited, kUrllc, kTimeSensitive };

std::string ToString(SliceKind kind);
SliceKind SliceKindFromString(const std::string& s);

// QoS descriptor for one slice. Only the fields belonging to `kind` are set.
struct SliceSpec {
  std::string id;
  SliceKind kind = SliceKind::kCapacityLimited;

  // CL
  std::optional<double> capacity_bps;
  // URLLC
  std::optional<double> delay_max_s;
  std::optional<double> reliability;
  std::optional<double> jitter_s;
  std::optional<double> arrival_rate_bps;
  // TS
  std::optional<double> packet_bits;
  std::optional<double> sched_period_s;

  // Target bit error rate used to derive the SNR gap; unset means gap 1.
  std::optional<double> ber;

  void Validate() const;
  double SnrGap() const;
};

struct UserQoS {
  int user_id = 0;
  std::string slice_id;
  double target_rate_bps = 0.0;
};

// Rate that keeps P(D > d_max) <= 1 - gamma and std(D) <= jitter for an M/M/1 queue.
double UrllcTargetRate(double a_bps, double gamma, double d_max_s, double jitter_s);

double TsTargetRate(double packet_bits, double sched_period_s);

// exp(-(r - a) d_max); 1 when the queue is unstable.
double DelayOutageProbability(double rate_bps, double arrival_bps, double d_max_s);

// SNR gap of uncoded M-QAM at the given BER.
double SnrGapFromBer(double ber);

// Target rate implied by a URLLC or TS slice spec. CL slices have no closed form.
double ClosedFormTargetRate(const SliceSpec& slice);

enum class TailEstimator {
  kCount,        // fraction of packets whose sojourn exceeds d_max
  kConditional,  // mean of P(sojourn > d_max | wait); same expectation, far lower variance
};

// FIFO M/M/1 with Poisson arrivals and exponential packet lengths of unit mean
// (rates are packets of one bit per second). Estimates the probability that a
// packet's sojourn time exceeds d_max_s.
double SimulateMm1DelayTail(double arrival_bps, double service_bps, double d_max_s,
                            std::uint64_t num_packets, std::uint64_t rng_seed,
                            TailEstimator estimator = TailEstimator::kCount);

}  // namespace slicealloc
