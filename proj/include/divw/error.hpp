#ifndef DIVW_ERROR_HPP
#define DIVW_ERROR_HPP

#include <stdexcept>
#include <string>

namespace divw {

// Category drives the CLI exit code: usage 1, config/data 2, degenerate 3.
enum class ErrorKind { usage, config, data, degenerate };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class UsageError : public Error {
public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

// Raised when an estimator is undefined on the given instruments: empty
// selection, or a non-positive (debiased) denominator.
class DegenerateError : public Error {
public:
  DegenerateError(const std::string& what, double denominator)
      : Error(ErrorKind::degenerate, what), denominator_(denominator) {}
  double denominator() const noexcept { return denominator_; }

private:
  double denominator_;
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return 1;
    case ErrorKind::config:
    case ErrorKind::data: return 2;
    case ErrorKind::degenerate: return 3;
  }
  return 1;
}

}  // namespace divw

#endif
