// Error types shared by every pbtrack module.
#pragma once

#include <stdexcept>
#include <string>

namespace pbtrack {

enum class ErrorKind {
  contract,           // dimension mismatch or other precondition violation
  singular_inertia,   // M(q) numerically singular
  degenerate_path,    // reduced inertia at or below beta
  domain,             // path parameter outside the path domain
  boundary_derivative,// derivative requested on a clamped boundary
  numeric_fault,      // non-finite intermediate quantity
  config,             // configuration syntax or semantic error
  misuse,             // operation applied to an incompatible input
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::contract: return "contract violation";
    case ErrorKind::singular_inertia: return "singular inertia";
    case ErrorKind::degenerate_path: return "degenerate path";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::boundary_derivative: return "boundary derivative";
    case ErrorKind::numeric_fault: return "numeric fault";
    case ErrorKind::config: return "config error";
    case ErrorKind::misuse: return "misuse";
    case ErrorKind::io: return "io error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace pbtrack
