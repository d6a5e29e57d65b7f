#pragma once

#include <stdexcept>
#include <string>

namespace curvrec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent data (empty rasters, dimension mismatches, bad files).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A parameter outside its documented range.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

}  // namespace curvrec
