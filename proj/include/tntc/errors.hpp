// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace tntc {

/// Base of every error raised by the core library. The C API maps each
/// subclass onto a status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input record (bad number, non-finite coordinate, bad header).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Structurally valid input that violates a dataset-wide rule, e.g.
/// inconsistent joint counts.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A precondition on shapes or sizes was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameters or configuration document.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Dataset cannot be split as requested.
class StratificationError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tntc
