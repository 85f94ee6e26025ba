#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lbhic {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor dimensions do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid model, layer or tool configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed weight file. `offset` is the byte position where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Entropy-coded data could not be decoded.
class DecodeError : public Error {
 public:
  using Error::Error;
};

}  // namespace lbhic
