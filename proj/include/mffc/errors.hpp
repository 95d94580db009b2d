#pragma once

#include <stdexcept>
#include <string>

namespace mffc {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A constructor or free-function argument is outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Runtime data (images, descriptors, files already parsed) violates a precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Two otherwise-valid objects are mutually inconsistent (size/kind mismatch),
/// or an operation was invoked on an object that cannot support it.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A learning stage failed to produce a usable model (rank deficiency,
/// non-convergence, degenerate inputs).
class LearningError : public Error {
 public:
  using Error::Error;
};

/// File-format or filesystem failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mffc
