#pragma once

#include <stdexcept>
#include <string>

namespace ptsim {

// Error: every failure raised by the library carries a stable kind name
// (e.g. "EmptyLog", "SyntaxError") that the CLI and service surface verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), _kind(std::move(kind)) {}

  const std::string& kind() const noexcept { return _kind; }

 private:
  std::string _kind;
};

// InvariantViolation carries the violated invariant text separately so that
// callers (the HTTP service) can name it in a 422 payload.
class InvariantViolation : public Error {
 public:
  explicit InvariantViolation(std::string invariant)
      : Error("InvariantViolation", invariant), _invariant(std::move(invariant)) {}

  const std::string& invariant() const noexcept { return _invariant; }

 private:
  std::string _invariant;
};

}  // namespace ptsim
