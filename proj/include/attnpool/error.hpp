// Copyright (c) The attnpool Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace attnpool {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is outside its valid range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A feature or checkpoint file has the wrong magic or header.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A file payload is shorter or longer than its header declares.
class LengthError : public Error {
 public:
  using Error::Error;
};

/// A value is not representable (e.g. NaN or Inf on write).
class ValueError : public Error {
 public:
  using Error::Error;
};

/// The data cannot support the requested computation (empty split, empty
/// confusion matrix, missing layer features).
class DataError : public Error {
 public:
  using Error::Error;
};

/// An index (class label, fold id) is out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// A lookup key does not exist.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Manifest parsing or validation failure. `kind()` names which invariant was
/// violated so callers and tests can tell them apart.
class ManifestError : public Error {
 public:
  enum class Kind {
    kSyntax,
    kTooFewClasses,
    kLabelOutOfRange,
    kFoldOutOfRange,
    kMissingFold,
    kDuplicateRecord,
    kDanglingReference,
  };

  ManifestError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace attnpool
