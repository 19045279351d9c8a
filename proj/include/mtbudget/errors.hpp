#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtb {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A dense solve produced a residual above its tolerance.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class DisconnectedGraph : public Error {
 public:
  using Error::Error;
};

/// Kernel normalization would divide by zero.
class ZeroNormInstance : public Error {
 public:
  using Error::Error;
};

class BudgetFull : public Error {
 public:
  using Error::Error;
};

/// No shrinking coefficient in (0,1] satisfies the Forgetron deficit cap.
class NoFeasibleShrink : public Error {
 public:
  using Error::Error;
};

/// A bound calculator was called outside the domain of its formula.
class DomainError : public Error {
 public:
  using Error::Error;
};

class TaskOutOfRange : public Error {
 public:
  using Error::Error;
};

class EmptyStream : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mtb
