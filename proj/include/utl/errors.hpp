#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace utl {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid scalar parameter (sparsity level, radius, distribution parameter).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite data or a decomposition that failed to converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated matrix file.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace utl
