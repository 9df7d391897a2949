/*
 * Copyright 2026 The isect Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace isect {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (index out of range, bad size, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Two sketches were built with different seeds or sizes.
class IncompatibleSketchError : public Error {
 public:
  using Error::Error;
};

/// An estimator was asked to work on a sketch that has seen no elements.
class EmptySketchError : public Error {
 public:
  using Error::Error;
};

/// Parameters outside the region where a likelihood or formula is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Closed forms that are singular on the boundary (n = 0, |A\B| = 0 or |B\A| = 0).
class SingularParametersError : public DomainError {
 public:
  using DomainError::DomainError;
};

class UnsupportedSizeError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Malformed or unknown sketch/CSV document.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace isect
