#pragma once

#include <stdexcept>
#include <string>

namespace slicealloc {

// Scenario file or CLI input that violates the schema.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Demand that cannot be served: a user with a positive target and no usable
// subchannel, or protected-slice demand alone exceeding the power budget.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, long slot = -1)
      : std::runtime_error(what), slot_(slot) {}
  long slot() const { return slot_; }

 private:
  long slot_;
};

}  // namespace slicealloc
