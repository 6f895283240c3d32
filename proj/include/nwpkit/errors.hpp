#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace nwpkit {

/// Invalid sizes, specs or parameters passed by the caller.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Missing or malformed input data (files, stats entries, climatology bins).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric precondition failed on otherwise well-formed data
/// (zero variance, violated stability bound, degenerate reference MSE).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Container I/O failure. Carries the byte offset at which the problem was
/// detected so callers can report it.
class IoError : public DataError {
 public:
  enum class Kind { open, magic, header, truncated, dtype, grid, write };

  IoError(Kind kind, const std::string& what, std::uint64_t offset)
      : DataError(what + " (byte offset " + std::to_string(offset) + ")"),
        kind_(kind),
        offset_(offset) {}

  Kind kind() const noexcept { return kind_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::uint64_t offset_;
};

}  // namespace nwpkit
