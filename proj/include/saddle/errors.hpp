#pragma once

#include <stdexcept>
#include <string>

namespace saddle {

// Input point has the wrong dimension or non-finite coordinates.
class InvalidPoint : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Label outside the sample space of a stochastic objective.
class InvalidSample : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Finite-difference step too small to perturb a coordinate.
class DegenerateStep : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterate or gradient became non-finite.
class Divergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition of an operation was violated by the caller.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Explicit stochastic step is outside the stability region.
class StepSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace saddle
