#pragma once

#include <stdexcept>
#include <string>

namespace folim {

// Malformed input: bad ids, bad files, syntax errors, violated preconditions
// on caller-supplied data.  Maps to CLI exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A witness-derived quantity did not settle across the sequence window, or a
// finite-depth truncation left it undetermined.  Maps to CLI exit code 3.
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A search ran out of its node / enumeration budget.  Maps to exit code 3.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A check precondition does not hold for the supplied sets / parameters.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace folim
