#pragma once

#include <stdexcept>
#include <string>

namespace sketchreg {

/// A caller broke a documented precondition (bad dimension, bad flag, ...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An index or value lies outside the domain a hash family is defined on.
class DomainError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Two sketches that were not drawn from the same embedding were combined.
class MergeError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Reading or writing a file failed, or its contents are malformed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rank deficiency, loss of positive definiteness, non-finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sketchreg
