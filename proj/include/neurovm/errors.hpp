#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "neurovm/resources.hpp"

namespace neurovm {

/// Base of every error raised by the simulator.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class SchedulingInPast : public Error {
 public:
  using Error::Error;
};

/// Allocation failed; `deficient()` is the first class that ran short.
class InsufficientResources : public Error {
 public:
  InsufficientResources(ResourceClass deficient, const std::string& what)
      : Error(what), deficient_(deficient) {}
  ResourceClass deficient() const noexcept { return deficient_; }

 private:
  ResourceClass deficient_;
};

class UnknownSlot : public Error {
 public:
  using Error::Error;
};

class SlotBusy : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class FootprintOverflow : public Error {
 public:
  using Error::Error;
};

class VmUnknown : public Error {
 public:
  using Error::Error;
};

class VmBusy : public Error {
 public:
  using Error::Error;
};

class RingClosed : public Error {
 public:
  using Error::Error;
};

class OutOfDomain : public Error {
 public:
  using Error::Error;
};

class ExportIoFailure : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed scenario text. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error(what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Well-formed scenario that fails validation; `field()` is a JSON-path-like locator.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace neurovm
