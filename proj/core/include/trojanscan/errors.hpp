#pragma once

#include <stdexcept>
#include <string>

namespace trojanscan {

/// Tensor or model dimensions do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Caller supplied data that violates an operation's precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation invoked on an object in the wrong state (e.g. backward without a tape).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File or manifest could not be read, written or parsed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace trojanscan
