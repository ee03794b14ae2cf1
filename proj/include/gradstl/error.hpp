#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gradstl {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Division by zero, sqrt of a negative, or a non-differentiable point.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Variable index or name outside the bound sample.
class UnboundVariable : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents (CSV rows, numbers).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class UnknownVariable : public Error {
 public:
  using Error::Error;
};

class InvalidInterval : public Error {
 public:
  using Error::Error;
};

// A min/max over a window that contains no sample.
class EmptyWindow : public Error {
 public:
  using Error::Error;
};

class NonPositiveGamma : public Error {
 public:
  using Error::Error;
};

class NonFiniteGradient : public Error {
 public:
  NonFiniteGradient(const std::string& what, std::size_t step)
      : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : Error("config key '" + key + "': " + what), key_(key) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gradstl
