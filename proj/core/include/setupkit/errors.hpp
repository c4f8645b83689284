// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace setupkit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bracket expansion ran out of doublings without a sign change.
class BracketNotFound : public Error {
 public:
  using Error::Error;
};

/// A bracketing search did not reach tolerance within its iteration budget.
class MaxIterExceeded : public Error {
 public:
  using Error::Error;
};

class AdapterFailure : public Error {
 public:
  using Error::Error;
};

class SingularKernel : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class UnsupportedDimension : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace setupkit
