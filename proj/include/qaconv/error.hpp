#pragma once

#include <stdexcept>
#include <string>

namespace qaconv {

/// Malformed input: bad indices, mismatched dimensions, schema problems.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested system size exceeds a storage or solver cap.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Degenerate Ising ground state (the endpoint of the anneal must be unique).
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or a solver that failed to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A schedule was used where a passing certificate is required.
class CertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration error; `pointer` is a JSON pointer into the config.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string pointer, const std::string& what)
      : std::runtime_error(pointer + ": " + what), pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qaconv
