#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace freqdenoise {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or rank mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Transform length outside the supported power-of-two set.
class UnsupportedLengthError : public Error {
 public:
  using Error::Error;
};

// A backward pass was requested for a value that is not a scalar node of
// the graph it was given.
class InvalidGraphError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf encountered where finite values are required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class EmptyDatasetError : public Error {
 public:
  using Error::Error;
};

// Zero-energy signal/noise where a ratio or scaling is required.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Zero-energy ground truth in a relative error denominator.
class DegenerateTargetError : public Error {
 public:
  using Error::Error;
};

// Segment/PSD (or similar paired-file) count mismatch.
class PairingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Configuration validation failure. Carries every violated field so a
// single pass reports all problems.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}
  explicit ConfigError(const std::string& msg)
      : Error(msg), violations_{msg} {}

  const std::vector<std::string>& violations() const { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid configuration:";
    for (const auto& s : v) {
      out += "\n  - ";
      out += s;
    }
    return out;
  }
  std::vector<std::string> violations_;
};

// Binary/CSV container parsing failure with a machine-checkable kind.
class FormatError : public Error {
 public:
  enum class Kind {
    BadMagic,
    BadVersion,
    BadHeader,        // malformed header structure or fields
    HeaderMismatch,   // header inconsistent with payload/expected layout
    Truncated,        // payload shorter (or longer) than the header implies
    RaggedRow,        // CSV rows of unequal length
    NonFinite,        // NaN/Inf in stored values
  };

  FormatError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace freqdenoise
