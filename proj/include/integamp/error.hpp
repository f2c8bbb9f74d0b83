#pragma once

#include <stdexcept>
#include <string>

namespace integamp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller passed a value outside an operation's domain (non-finite, negative, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A request that is well formed but lies outside the model's valid range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Config text could not be parsed or validated. line() is 1-based, 0 when not tied to a line.
class ConfigError : public Error {
 public:
  ConfigError(int line, const std::string& message)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line),
        detail_(message) {}

  int line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  int line_;
  std::string detail_;
};

/// A measurement protocol ran but could not produce its result.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace integamp
