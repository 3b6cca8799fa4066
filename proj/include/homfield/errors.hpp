#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace homfield {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidGeometryError : public Error {
public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
public:
  using Error::Error;
};

/// Green's function evaluated at zero separation.
class SingularityError : public Error {
public:
  using Error::Error;
};

/// A requested allocation exceeds the configured memory budget.
class ResourceError : public Error {
public:
  ResourceError(const std::string &what, std::size_t required_bytes)
      : Error(what), required_bytes_(required_bytes) {}
  std::size_t required_bytes() const noexcept { return required_bytes_; }

private:
  std::size_t required_bytes_;
};

class NonConvergenceError : public Error {
public:
  NonConvergenceError(const std::string &what, double best_residual, int iterations)
      : Error(what), best_residual_(best_residual), iterations_(iterations) {}
  double best_residual() const noexcept { return best_residual_; }
  int iterations() const noexcept { return iterations_; }

private:
  double best_residual_;
  int iterations_;
};

/// Both correlation denominators vanish: no detector sees any field.
class UndefinedCorrelationError : public Error {
public:
  using Error::Error;
};

class RangeError : public Error {
public:
  using Error::Error;
};

class NumericalError : public Error {
public:
  NumericalError(const std::string &what, double estimate)
      : Error(what), estimate_(estimate) {}
  double estimate() const noexcept { return estimate_; }

private:
  double estimate_;
};

class ConfigError : public Error {
public:
  ConfigError(const std::string &field, int line, const std::string &message)
      : Error(format(field, line, message)), field_(field), line_(line) {}
  const std::string &field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

private:
  static std::string format(const std::string &field, int line, const std::string &message) {
    std::string out = "config error";
    if (!field.empty()) out += " in '" + field + "'";
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    return out + ": " + message;
  }
  std::string field_;
  int line_;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace homfield
