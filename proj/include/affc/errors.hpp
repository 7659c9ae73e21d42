// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace affc {

/// Root of every error raised by the harness.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Image dimensions or buffer length inconsistent.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Argument outside its mathematical domain (e.g. strength not in [0,1]).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class AggregationError : public Error {
 public:
  using Error::Error;
};

class ComparisonError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

class CacheError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class ImageIoError : public Error {
 public:
  using Error::Error;
};

/// The detector answered, but the answer violates the wire schema.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// The detector process or connection went away.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Handshake rejected (e.g. protocol version mismatch).
class StartupError : public Error {
 public:
  using Error::Error;
};

/// A single detector invocation failed; carries the interference strength
/// being probed when it happened.
class ProbeError : public Error {
 public:
  ProbeError(const std::string& what, double strength)
      : Error(what + " (probe strength " + std::to_string(strength) + ")"),
        strength_(strength) {}

  double strength() const noexcept { return strength_; }

 private:
  double strength_;
};

}  // namespace affc
