// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace tabmixer {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input, configuration or precondition. The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Incompatible tensor extents.
class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Malformed file contents. The message names the file and byte offset.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Filesystem failure (missing file, unwritable directory).
class IoError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// NaN/Inf produced or consumed by a computation. The CLI maps these to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tabmixer
