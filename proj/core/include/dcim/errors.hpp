#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dcim {

// Dimension mismatches and out-of-range arguments are reported with
// std::invalid_argument. The types below cover the remaining failure modes.

/// An exact computation would exceed its enumeration budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed binary input (IDX or checkpoint). Carries the byte offset at
/// which the problem was detected.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Training produced a non-finite loss or parameter.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dcim
