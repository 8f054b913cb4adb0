#pragma once

#include <stdexcept>
#include <string>

namespace mla {

// Malformed input: bad ids, non-positive weights, broken preconditions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A schedule that does not serve every request exactly once, never early.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A request exceeding a hard resource guard (brute-force size, trial caps).
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mla
