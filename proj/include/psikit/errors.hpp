#pragma once

#include <stdexcept>
#include <string>

namespace psikit {

// Base for all errors raised by the library. `code` is the stable
// machine-readable identifier the CLI puts into its error objects.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Configuration / I/O problems (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Numeric / solver problems (CLI exit code 2).
class NumericError : public Error {
 public:
  using Error::Error;
};

struct BracketNotFound : NumericError {
  explicit BracketNotFound(const std::string& what)
      : NumericError("BRACKET_NOT_FOUND", what) {}
};

struct NonFiniteEvaluation : NumericError {
  explicit NonFiniteEvaluation(double at)
      : NumericError("NON_FINITE_EVALUATION",
                     "objective returned a non-finite value at t = " +
                         std::to_string(at)),
        t(at) {}
  double t;
};

struct InvalidWeights : NumericError {
  explicit InvalidWeights(const std::string& what)
      : NumericError("INVALID_WEIGHTS", what) {}
};

struct DomainEmpty : NumericError {
  DomainEmpty(double theta1_x, double theta1_y)
      : NumericError("DOMAIN_EMPTY",
                     "comparison domain (" + std::to_string(theta1_x) + ", " +
                         std::to_string(theta1_y) + ") is empty") {}
};

struct DivisionNearZero : NumericError {
  explicit DivisionNearZero(double at)
      : NumericError("DIVISION_NEAR_ZERO",
                     "denominator within evaluation guard at t = " +
                         std::to_string(at)),
        t(at) {}
  double t;
};

struct AtTheta1 : NumericError {
  AtTheta1(double at, double theta1)
      : NumericError("AT_THETA1",
                     "t = " + std::to_string(at) +
                         " lies inside the exclusion radius of theta1 = " +
                         std::to_string(theta1)),
        t(at) {}
  double t;
};

struct RichnessViolated : NumericError {
  explicit RichnessViolated(double at)
      : NumericError("RICHNESS_VIOLATED",
                     "family has no member on the required side of t = " +
                         std::to_string(at)),
        t(at) {}
  double t;
};

struct EnvelopeOrderViolated : NumericError {
  EnvelopeOrderViolated(double at, double lower, double upper)
      : NumericError("ENVELOPE_ORDER_VIOLATED",
                     "q_lower = " + std::to_string(lower) + " exceeds q_upper = " +
                         std::to_string(upper) + " at t = " + std::to_string(at)),
        t(at),
        q_lower(lower),
        q_upper(upper) {}
  double t;
  double q_lower;
  double q_upper;
};

struct TauOutsideGrid : NumericError {
  TauOutsideGrid(double tau, double lo, double hi)
      : NumericError("TAU_OUTSIDE_GRID",
                     "tau = " + std::to_string(tau) + " outside grid span [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "]") {}
};

struct OutsideGridSpan : NumericError {
  explicit OutsideGridSpan(double at)
      : NumericError("OUTSIDE_GRID_SPAN",
                     "t = " + std::to_string(at) + " outside the working grid span"),
        t(at) {}
  double t;
};

}  // namespace psikit
