#pragma once

#include <stdexcept>
#include <string>

namespace langvec {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An index (class, row, character id) is out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or input set (empty corpus, bad hold-out size, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text; the message carries file and line.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A name (language code, parameter) is not known.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinity where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace langvec
