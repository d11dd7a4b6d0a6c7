#pragma once

#include <stdexcept>
#include <string>

namespace cleer {

// Every library failure derives from Error so callers can catch one type;
// the subclasses let the CLI map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameters or flags (even kernel, overlap >= window, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// Malformed SEGD / CKPT containers. Messages name the byte offset.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a numeric contract (missing gradient, non-scalar loss).
class ContractError : public Error {
 public:
  using Error::Error;
};

class StratificationError : public Error {
 public:
  using Error::Error;
};

/// Filter design produced poles on or outside the unit circle.
class DesignError : public Error {
 public:
  using Error::Error;
};

}  // namespace cleer
