#pragma once

#include <stdexcept>
#include <string>

namespace gran {

// Base error type for everything raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A tensor shape does not fit the primitive it was handed to.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// NaN/Inf surfaced, a calibration failed to converge, training diverged.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

// A pipeline stage was asked for an artifact that does not exist or is stale.
class ArtifactError : public Error {
 public:
  explicit ArtifactError(const std::string& msg) : Error(msg) {}
};

// Bad flags, bad config file, missing mandatory keys.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& msg) : Error(msg) {}
};

}  // namespace gran
