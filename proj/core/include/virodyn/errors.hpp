#pragma once

#include <stdexcept>
#include <string>

namespace virodyn {

// Parameter combination outside the domain of a formula (e.g. R0 <= 1 where
// the infected state is required, or a violated model hypothesis).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Time integration produced NaN or runaway values.
class InstabilityError : public std::runtime_error {
 public:
  InstabilityError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

// A root bracket could not be established.
class BracketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A 3x3 solve hit a numerically singular matrix.
class SingularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace virodyn
