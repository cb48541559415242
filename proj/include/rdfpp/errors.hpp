#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace rdfpp {

// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Value or derivative is infinite at the requested point.
struct UnboundedError : std::range_error {
  using std::range_error::range_error;
};

// Evaluation outside the range covered by a table or grid.
struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Root finding, quadrature or iteration did not reach tolerance.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input does not satisfy a structural assumption (shape, case, integrability).
struct UnsupportedError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A moment integral of the envelope derivative diverges.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& what, double exponent)
      : std::runtime_error(what), exponent(exponent) {}
  double exponent;
};

struct ConvergenceError : NumericalError {
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : NumericalError(what), trace(std::move(trace)) {}
  std::vector<double> trace;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rdfpp
