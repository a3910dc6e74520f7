// Copyright 2026 The stein_thin Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace stein_thin {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument: wrong shape, empty input, non-finite values, m = 0, ...
class InputError : public Error {
 public:
  using Error::Error;
};

/// A kernel, preconditioner or sampler configuration that cannot be used.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite intermediate value or an ill-conditioned linear system.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Zero within-chain variance (or singular covariance) in a diagnostic.
class DegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed text in an input file. `line` is 1-based.
class ParseError : public InputError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed text whose shape or values violate the chain file schema.
class SchemaError : public InputError {
 public:
  SchemaError(std::size_t line, const std::string& what)
      : InputError(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace stein_thin
