#pragma once

#include <stdexcept>
#include <string>

namespace acs {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or schema-violating input document.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Fully preemptive expansion larger than the configured cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// No worst-case-feasible schedule exists (or none was found).
class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what, std::string witness = {})
      : Error(what), witness_(std::move(witness)) {}

  const std::string& witness() const noexcept { return witness_; }

 private:
  std::string witness_;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

}  // namespace acs
