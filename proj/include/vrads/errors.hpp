// Copyright 2026 The vrads Authors.
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

#ifndef VRADS_ERRORS_HPP_
#define VRADS_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace vrads {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Math domain violations: log/sqrt of non-positive values, sigma <= 0.
class DomainError : public Error {
 public:
  using Error::Error;
};

class EmptyReductionError : public Error {
 public:
  using Error::Error;
};

class AxisError : public Error {
 public:
  using Error::Error;
};

// Misuse of the differentiation tape (non-scalar root, detached tensors).
class AutodiffError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced or consumed where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing, malformed or unusable data (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace vrads

#endif  // VRADS_ERRORS_HPP_
