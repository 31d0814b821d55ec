#pragma once

#include <stdexcept>
#include <string>

namespace ddlab {

/// Caller violated a documented precondition (bad flag, bad shape, bad index).
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// A NaN or infinity showed up where only finite values are allowed.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// An input file (CSV, manifest, config, checkpoint) does not match its schema.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ddlab
