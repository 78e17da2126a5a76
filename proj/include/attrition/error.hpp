#pragma once

#include <stdexcept>
#include <string>

namespace attrition {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CSV contents, table shapes).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A caller-supplied parameter is outside its legal range.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// The requested operation is not defined for this model kind.
class UnsupportedKind : public Error {
 public:
  using Error::Error;
};

/// A persisted artifact is missing, corrupt, or has the wrong version.
class ArtifactError : public Error {
 public:
  using Error::Error;
};

}  // namespace attrition
