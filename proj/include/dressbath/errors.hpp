#pragma once

#include <stdexcept>
#include <string>

namespace dressbath {

// Argument outside its documented range (sector numbers, site indices, ...).
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A precondition on an operator or state was violated (non-hermitian
// generator, mismatched domains, degenerate frame).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Requested Hilbert space is larger than the desk-scale limits.
class DimensionOverflow : public std::length_error {
 public:
  using std::length_error::length_error;
};

class Unsupported : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dressbath
