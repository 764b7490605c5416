#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dag {

/// Raised when a caller breaks an operation's precondition (shape mismatch,
/// out-of-range argument, empty input where one is required).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The homogeneous denominator of a perspective transform came too close to
/// zero for at least one landmark.
class DegenerateTransform : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed on-disk data. Carries the offending file and byte offset.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string file, std::size_t offset, const std::string& what)
      : std::runtime_error(file + " (byte " + std::to_string(offset) + "): " + what),
        file_(std::move(file)),
        offset_(offset) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::string file_;
  std::size_t offset_;
};

class IncompatibleCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown key, wrong type or out-of-range value in a configuration document.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace dag
