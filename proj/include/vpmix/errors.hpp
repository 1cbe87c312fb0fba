// Exception types shared across the library.

#pragma once

#include <stdexcept>
#include <string>

namespace vpmix {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing, unreadable, or unwritable file.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed container or unsupported codec; the message names the offending field.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the documented domain (rate mismatch, silent input, bad span).
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace vpmix
