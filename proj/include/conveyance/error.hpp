#ifndef CONVEYANCE_ERROR_HPP
#define CONVEYANCE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace conveyance {

enum class ErrorKind {
  invalid_argument,
  invalid_level,
  dimension,
  numeric_failure,
  fit_domain,
  no_resonance,
  geometry,
  no_turning_points,
  level_not_found,
  no_slope,
  not_converged,
  range,
  config,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_level: return "invalid-level";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::numeric_failure: return "numeric-failure";
    case ErrorKind::fit_domain: return "fit-domain";
    case ErrorKind::no_resonance: return "no-resonance";
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::no_turning_points: return "no-turning-points";
    case ErrorKind::level_not_found: return "level-not-found";
    case ErrorKind::no_slope: return "no-slope";
    case ErrorKind::not_converged: return "not-converged";
    case ErrorKind::range: return "range";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Iterative method gave up; carries the iteration count reached.
class NumericFailure : public Error {
 public:
  NumericFailure(const std::string& what, long iterations = -1)
      : Error(ErrorKind::numeric_failure, what), iterations_(iterations) {}

  long iterations() const noexcept { return iterations_; }

 private:
  long iterations_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace conveyance

#endif  // CONVEYANCE_ERROR_HPP
