#pragma once

#include <stdexcept>
#include <string>

namespace medq {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Degradation type not applicable to the image's modality.
class IncompatibleModality : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Endpoint rejected credentials; aborts a benchmark run.
class AuthError : public Error {
 public:
  using Error::Error;
};

}  // namespace medq
