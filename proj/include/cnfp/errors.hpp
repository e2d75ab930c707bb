#pragma once

#include <stdexcept>
#include <string>

namespace cnfp {

/// Operand dimensions disagree with what an operation expects.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A point lies outside the domain of an inverse map.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A state (or region parameter) violates its declared invariants.
class InvalidStateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was called out of order, e.g. stepping a truncated episode.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A gradient, loss or input contained NaN or Inf.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cnfp
