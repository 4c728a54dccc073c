#pragma once

#include <stdexcept>
#include <string>

namespace hypoflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: grid specs, schedules, config files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A physical or numerical invariant broke (positivity, mass, h_min guard).
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace hypoflow
