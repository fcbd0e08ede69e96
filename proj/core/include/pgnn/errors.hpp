#pragma once

#include <stdexcept>
#include <string>

namespace pgnn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Array or grid shapes disagree, or a grid is too small for the operation.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar parameter lies outside its admissible domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Input values lie outside the range an operation accepts.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A file exists but its contents are malformed or of an unsupported version.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A required file is absent. `subject` names what was being loaded.
class MissingFileError : public IoError {
 public:
  MissingFileError(std::string subject, const std::string& path);
  const std::string& subject() const noexcept { return subject_; }

 private:
  std::string subject_;
};

/// Caller violated a documented precondition (e.g. stepping without gradients).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace pgnn
