// Copyright 2026 The Prompt Tuner Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ptune {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or non-finite input values, out-of-range labels.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Shapes or lengths that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration: unknown keys, wrong types, inconsistent parameter counts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A dataset that cannot satisfy an operation (missing classes, too few shots).
class InvalidDataset : public Error {
 public:
  using Error::Error;
};

/// Binary file format violation, tagged with the offending byte offset.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Oracle transport failure. `retryable()` is true for failures that a later
/// attempt may clear (connection errors, HTTP 503).
class QueryError : public Error {
 public:
  QueryError(const std::string& what, int attempts, bool retryable)
      : Error(what + " (after " + std::to_string(attempts) + " attempt(s))"),
        attempts_(attempts), retryable_(retryable) {}
  int attempts() const noexcept { return attempts_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  int attempts_;
  bool retryable_;
};

}  // namespace ptune
