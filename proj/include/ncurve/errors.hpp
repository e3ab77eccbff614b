#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ncurve {

/// Broad failure category; the CLI maps these onto exit codes.
enum class ErrorCategory { Usage, Data, Numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

struct EmptyInput : Error {
  explicit EmptyInput(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

struct EmptyFile : EmptyInput {
  explicit EmptyFile(const std::string& what) : EmptyInput(what) {}
};

struct OutOfRange : Error {
  explicit OutOfRange(const std::string& what) : Error(ErrorCategory::Usage, what) {}
};

struct InvalidConfig : Error {
  explicit InvalidConfig(const std::string& what) : Error(ErrorCategory::Usage, what) {}
};

struct NotPositiveDefinite : Error {
  explicit NotPositiveDefinite(const std::string& what)
      : Error(ErrorCategory::Numerical, what) {}
};

struct NotPSD : Error {
  explicit NotPSD(const std::string& what) : Error(ErrorCategory::Numerical, what) {}
};

/// Parse failure in an input file. `line` is 1-based; 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorCategory::Data, "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class RaggedSequence : public Error {
 public:
  RaggedSequence(std::size_t line, const std::string& what)
      : Error(ErrorCategory::Data, "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Raised by the optimizer when the loss or its gradient stops being finite.
class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(std::size_t iteration, std::size_t component, std::size_t t_index,
                const std::string& what)
      : Error(ErrorCategory::Numerical, what),
        iteration_(iteration),
        component_(component),
        t_index_(t_index) {}

  std::size_t iteration() const noexcept { return iteration_; }
  std::size_t component() const noexcept { return component_; }
  std::size_t t_index() const noexcept { return t_index_; }

 private:
  std::size_t iteration_;
  std::size_t component_;
  std::size_t t_index_;
};

}  // namespace ncurve
