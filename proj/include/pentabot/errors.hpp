#pragma once

#include <stdexcept>
#include <string>

namespace pentabot {

/// Input outside the mathematical domain of an operation (coincident probe,
/// negative distance, non-positive scaling inputs).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A coil current outside its admissible range.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Invalid configuration: bad scene, unknown key, violated invariant.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation not allowed in the current lifecycle state (attach while loaded,
/// step after termination).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pentabot
