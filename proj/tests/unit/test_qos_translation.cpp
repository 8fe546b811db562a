#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "slicealloc/qos_translation.hpp"

using namespace slicealloc;

TEST_CASE("URLLC target rate") {
  // -ln(1 - 0.999) / 0.01 = 690.78 < 1 / 0.001, so the jitter term wins.
  CHECK(UrllcTargetRate(2e6, 0.999, 0.01, 0.001) == doctest::Approx(2.001e6).epsilon(1e-9));
  CHECK(UrllcTargetRate(2e6, 0.999, 0.001, 1.0) == doctest::Approx(2e6 + 1000.0 * std::log(1000.0)).epsilon(1e-12));
  CHECK(UrllcTargetRate(2e6, 0.999, 0.001, 1.0) - 2e6 == doctest::Approx(6907.76).epsilon(1e-5));
  CHECK(UrllcTargetRate(0.0, 1e-12, 1.0, 1e12) < 1e-9);
  CHECK_THROWS_AS(UrllcTargetRate(2e6, 1.0, 0.01, 0.001), std::domain_error);
}

TEST_CASE("URLLC target rate is monotone in its inputs") {
  const double base = UrllcTargetRate(1e6, 0.99, 0.002, 0.004);
  CHECK(UrllcTargetRate(2e6, 0.99, 0.002, 0.004) >= base);
  CHECK(UrllcTargetRate(1e6, 0.999, 0.002, 0.004) >= base);
  CHECK(UrllcTargetRate(1e6, 0.99, 0.004, 0.004) <= base);
  CHECK(UrllcTargetRate(1e6, 0.99, 0.002, 0.008) <= base);
}

TEST_CASE("the URLLC rate meets its own outage target") {
  for (double gamma : {0.9, 0.99, 0.999, 0.99999}) {
    for (double d : {1e-3, 5e-3, 1e-2}) {
      for (double j : {1e-4, 1e-3, 1.0}) {
        const double r = UrllcTargetRate(2e6, gamma, d, j);
        CHECK(DelayOutageProbability(r, 2e6, d) <= (1.0 - gamma) * (1.0 + 1e-9));
      }
    }
  }
}

TEST_CASE("TS target rate") {
  CHECK(TsTargetRate(0.0, 0.01) == 0.0);
  CHECK(TsTargetRate(16400.0, 0.01) == doctest::Approx(1.64e6));
  CHECK(TsTargetRate(40000.0, 0.01) == doctest::Approx(4e6));
  CHECK(TsTargetRate(32800.0, 0.01) == doctest::Approx(2.0 * TsTargetRate(16400.0, 0.01)));
  CHECK(TsTargetRate(16400.0, 0.02) == doctest::Approx(0.5 * TsTargetRate(16400.0, 0.01)));
  CHECK_THROWS_AS(TsTargetRate(100.0, 0.0), std::domain_error);
}

TEST_CASE("delay outage probability") {
  CHECK(DelayOutageProbability(2e6 + 690.7755, 2e6, 0.01) == doctest::Approx(0.001).epsilon(1e-6));
  CHECK(DelayOutageProbability(2e6, 2e6, 0.01) == 1.0);
  CHECK(DelayOutageProbability(1e6, 2e6, 0.01) == 1.0);
}

TEST_CASE("M/M/1 delay tail simulation") {
  CHECK(SimulateMm1DelayTail(0.0, 10.0, 0.1, 1000, 1) == 0.0);
  CHECK(SimulateMm1DelayTail(100.0, 1000.0, 0.002, 20000, 4) == SimulateMm1DelayTail(100.0, 1000.0, 0.002, 20000, 4));
  // 1000 packets/s of headroom over 10 ms: the tail sits far below 1 - gamma.
  const double p = SimulateMm1DelayTail(2e6, 2.001e6, 0.01, 1'000'000, 8);
  CHECK(p <= 0.001 + 0.001);

  for (double margin : {0.5, 2.0, 5.0}) {
    const double d = margin / 900.0;
    const double expect = std::exp(-margin);
    CHECK(SimulateMm1DelayTail(100.0, 1000.0, d, 1'000'000, 12) == doctest::Approx(expect).epsilon(0.05));
  }
}

TEST_CASE("slice specs") {
  SliceSpec urllc;
  urllc.id = "u";
  urllc.kind = SliceKind::kUrllc;
  urllc.arrival_rate_bps = 2e6;
  urllc.reliability = 0.999;
  urllc.delay_max_s = 0.01;
  urllc.jitter_s = 0.001;
  CHECK_NOTHROW(urllc.Validate());
  CHECK(ClosedFormTargetRate(urllc) == doctest::Approx(2.001e6));
  CHECK(urllc.SnrGap() == 1.0);
  urllc.ber = 1e-6;
  CHECK(urllc.SnrGap() == doctest::Approx(1.5 / -std::log(5e-6)));

  SliceSpec cl;
  cl.id = "c";
  cl.kind = SliceKind::kCapacityLimited;
  CHECK_THROWS_AS(cl.Validate(), std::invalid_argument);
  cl.capacity_bps = 27e6;
  CHECK_NOTHROW(cl.Validate());
  cl.jitter_s = 0.1;
  CHECK_THROWS_AS(cl.Validate(), std::invalid_argument);

  CHECK(SliceKindFromString("TS") == SliceKind::kTimeSensitive);
  CHECK(ToString(SliceKind::kUrllc) == "URLLC");
  CHECK_THROWS_AS(SliceKindFromString("eMBB"), std::invalid_argument);
}

TEST_CASE("conditional tail estimator agrees with counting") {
  for (double margin : {1.0, 3.0}) {
    const double d = margin / 900.0;
    const double counted = SimulateMm1DelayTail(100.0, 1000.0, d, 1'000'000, 4);
    const double smooth = SimulateMm1DelayTail(100.0, 1000.0, d, 1'000'000, 4, TailEstimator::kConditional);
    CHECK(smooth == doctest::Approx(counted).epsilon(0.05));
    CHECK(smooth == doctest::Approx(std::exp(-margin)).epsilon(0.05));
  }
  CHECK(SimulateMm1DelayTail(100.0, 1000.0, 0.0, 1000, 4, TailEstimator::kConditional) == 1.0);
}
