#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace charcol {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Architecture-string grammar or ordering violation. Carries the index of
// the offending hyphen-separated token (0 = the input-size token).
class ParseError : public Error {
public:
  ParseError(const std::string& msg, std::size_t token_index)
      : Error("token " + std::to_string(token_index) + ": " + msg),
        token_index_(token_index) {}

  std::size_t token_index() const { return token_index_; }

private:
  std::size_t token_index_;
};

// Shape inference failure: non-positive dimension, pooling non-divisibility,
// or a tensor whose dims disagree with the layer it feeds.
class ShapeError : public Error {
public:
  using Error::Error;
};

// File and container problems: bad magic, truncation, unreadable paths,
// labels out of range, class-count mismatches.
class DataError : public Error {
public:
  using Error::Error;
};

// Caller passed a value outside an operation's documented domain.
class InvalidArgument : public Error {
public:
  using Error::Error;
};

// A numeric self-check (gradient verification) failed its threshold.
class NumericError : public Error {
public:
  using Error::Error;
};

}  // namespace charcol
