#pragma once

#include <stdexcept>
#include <string>

namespace fgd {

// Base class for everything this library throws.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible matrix shapes; message names both shapes.
class DimensionError : public Error {
public:
  using Error::Error;
};

// Iterative method failed to reach its tolerance; carries the residual.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& msg, double residual)
      : Error(msg), residual(residual) {}
  double residual;
};

// Matrix is (numerically) singular where positive definiteness is required.
class SingularityError : public Error {
public:
  using Error::Error;
};

// theta has left the neighborhood  ||theta^T theta - I|| < 1  on which the
// gram inverse and the feedback construction are valid.
class OffNeighborhoodError : public Error {
public:
  OffNeighborhoodError(const std::string& msg, double distance)
      : Error(msg), distance(distance) {}
  double distance;
};

// Optimizer abort: constraint drift crossed the configured bound.
class DriftAbortError : public Error {
public:
  DriftAbortError(const std::string& msg, double distance, double v_value,
                  double phi_norm)
      : Error(msg), distance(distance), v_value(v_value), phi_norm(phi_norm) {}
  double distance;
  double v_value;
  double phi_norm;
};

// A field or step produced a non-finite value.
class BlowupError : public Error {
public:
  using Error::Error;
};

// Invalid or out-of-range configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

}  // namespace fgd
