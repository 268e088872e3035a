#ifndef MEMSDE_ERRORS_HPP
#define MEMSDE_ERRORS_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace memsde {

// Base class for every error this library throws on purpose.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A caller violated a documented precondition (endpoint mismatch, bad grid, ...).
class ContractViolation : public Error {
public:
  explicit ContractViolation(const std::string& what) : Error(what) {}
};

// A time argument fell outside the stored window.
class OutOfRangeError : public Error {
public:
  explicit OutOfRangeError(const std::string& what) : Error(what) {}
};

// The monitored value crossed the blowup radius; carries the discrete stopping step.
class BlowupError : public Error {
public:
  BlowupError(const std::string& what, std::size_t step, double value)
      : Error(what), step(step), value(value) {}
  std::size_t step;
  double value;
};

// A functional evaluation diverged (overflowing exponent, infinite kernel mass).
class DivergenceError : public Error {
public:
  DivergenceError(const std::string& what, double lag) : Error(what), lag(lag) {}
  double lag;
};

// Picard iteration stopped contracting on the current chunk.
class ContractionFailure : public Error {
public:
  explicit ContractionFailure(const std::string& what) : Error(what) {}
};

// An operation needs metadata the object does not declare.
class UnsupportedOperation : public Error {
public:
  explicit UnsupportedOperation(const std::string& what) : Error(what) {}
};

// A Monte Carlo estimate excluded too many replicas to be trusted.
class UnreliableEstimate : public Error {
public:
  UnreliableEstimate(const std::string& what, std::size_t excluded, std::size_t total)
      : Error(what), excluded(excluded), total(total) {}
  std::size_t excluded;
  std::size_t total;
};

// Some chains of a multi-chain experiment failed; lists the offending seeds.
class PartialResultError : public Error {
public:
  PartialResultError(const std::string& what, std::vector<std::uint64_t> failed_seeds)
      : Error(what), failed_seeds(std::move(failed_seeds)) {}
  std::vector<std::uint64_t> failed_seeds;
};

// Malformed persisted data (bad magic, version, truncation).
class FormatError : public Error {
public:
  explicit FormatError(const std::string& what) : Error(what) {}
};

// Invalid experiment configuration; names the offending key.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace memsde

#endif
