#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "slicealloc/cl_controller.hpp"

using namespace slicealloc;

namespace {

ControllerState Seeded(double capacity, double factor, int users, double target) {
  ControllerState s = MakeController("cl", capacity, factor);
  std::set<int> ids;
  for (int i = 0; i < users; ++i) ids.insert(i);
  s = OnPopulationChange(s, ids);
  for (auto& [id, t] : s.targets) t = target;
  return s;
}

}  // namespace

TEST_CASE("five users over capacity shift down together") {
  ControllerState s = Seeded(27e6, 0.5, 5, 5.4e6);
  std::map<int, double> rates;
  for (int i = 0; i < 5; ++i) rates[i] = 6e6;  // 30 Mbps in total
  UpdateTargets(s, rates);
  CHECK(s.gain == doctest::Approx(0.1));
  for (const auto& [id, t] : s.targets) CHECK(t == doctest::Approx(5.1e6));
}

TEST_CASE("zero error leaves targets alone and negative error raises them") {
  ControllerState s = Seeded(27e6, 0.8, 3, 9e6);
  UpdateTargets(s, {{0, 9e6}, {1, 9e6}, {2, 9e6}});
  for (const auto& [id, t] : s.targets) CHECK(t == 9e6);
  UpdateTargets(s, {{0, 8e6}, {1, 8e6}, {2, 8e6}});
  for (const auto& [id, t] : s.targets) CHECK(t > 9e6);
}

TEST_CASE("targets are clamped at zero") {
  ControllerState s = Seeded(1e6, 0.8, 2, 1e5);
  UpdateTargets(s, {{0, 5e7}, {1, 5e7}});
  for (const auto& [id, t] : s.targets) CHECK(t == 0.0);
}

TEST_CASE("rates must cover exactly the members") {
  ControllerState s = Seeded(27e6, 0.8, 2, 1e6);
  CHECK_THROWS_AS(UpdateTargets(s, {{0, 1e6}}), std::invalid_argument);
  CHECK_THROWS_AS(UpdateTargets(s, {{0, 1e6}, {7, 1e6}}), std::invalid_argument);
}

TEST_CASE("gain factor must be a fraction") {
  CHECK_THROWS_AS(MakeController("cl", 27e6, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(MakeController("cl", 27e6, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(MakeController("cl", -1.0, 0.5), std::invalid_argument);
}

TEST_CASE("population changes") {
  ControllerState empty = MakeController("cl", 27e6, 0.5);
  SUBCASE("arrivals start at an equal share") {
    const ControllerState s = OnPopulationChange(empty, {0, 1, 2, 3, 4, 5, 6});
    REQUIRE(s.users() == 7);
    for (const auto& [id, t] : s.targets) CHECK(t == doctest::Approx(27e6 / 7.0));
    CHECK(s.gain < 1.0 / 7.0);
  }
  SUBCASE("survivors keep their targets") {
    ControllerState s = OnPopulationChange(empty, {0, 1, 2, 3, 4});
    s.targets[0] = 4e6;
    s.targets[1] = 6e6;
    s = OnPopulationChange(s, {0, 1});
    REQUIRE(s.users() == 2);
    CHECK(s.targets.at(0) == 4e6);
    CHECK(s.targets.at(1) == 6e6);
    CHECK(s.gain > 0.0);
    CHECK(s.gain < 0.5);
  }
  SUBCASE("no change is the identity") {
    const ControllerState s = OnPopulationChange(empty, {0, 1});
    const ControllerState again = OnPopulationChange(s, {0, 1});
    CHECK(again.targets == s.targets);
    CHECK(again.gain == s.gain);
  }
  SUBCASE("an empty slice idles") {
    const ControllerState s = OnPopulationChange(OnPopulationChange(empty, {0, 1}), {});
    CHECK(s.targets.empty());
    ControllerState idle = s;
    CHECK(UpdateTargets(idle, {}).empty());
  }
}

TEST_CASE("ideal plant converges geometrically to capacity") {
  for (double factor : {0.3, 0.5, 0.8}) {
    ControllerState s = Seeded(27e6, factor, 5, 1e6);
    double prev_error = std::abs(5e6 - 27e6);
    for (int t = 0; t < 40; ++t) {
      UpdateTargets(s, s.targets);  // the plant delivers exactly the targets
      double sum = 0.0;
      for (const auto& [id, r] : s.targets) sum += r;
      const double error = std::abs(sum - 27e6);
      CHECK(error <= prev_error * std::abs(1.0 - factor) * (1.0 + 1e-9) + 1e-6);
      prev_error = error;
    }
    double sum = 0.0;
    for (const auto& [id, r] : s.targets) sum += r;
    CHECK(std::abs(sum - 27e6) / 27e6 <= 0.01);
  }
}
