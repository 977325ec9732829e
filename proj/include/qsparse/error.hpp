#pragma once

#include <stdexcept>
#include <string>

namespace qsparse {

// Every failure raised by the library carries a stable machine-readable code
// (e.g. "NoBracket") next to the human-readable message. The CLI turns these
// into its error JSON and exit status.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

  // Domain errors are properties of the data (exit code 1); the rest are
  // caller mistakes (exit code 2).
  virtual bool is_domain_error() const noexcept { return true; }

 private:
  std::string code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message) : Error("InvalidArgument", message) {}
  bool is_domain_error() const noexcept override { return false; }
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& message) : Error("DimensionMismatch", message) {}
  bool is_domain_error() const noexcept override { return false; }
};

class RankDeficient : public Error {
 public:
  explicit RankDeficient(const std::string& message) : Error("RankDeficient", message) {}
};

class NoBracket : public Error {
 public:
  explicit NoBracket(const std::string& message) : Error("NoBracket", message) {}
};

class Gamma0TooSmall : public Error {
 public:
  explicit Gamma0TooSmall(const std::string& message) : Error("Gamma0TooSmall", message) {}
};

class Exhausted : public Error {
 public:
  explicit Exhausted(const std::string& message) : Error("Exhausted", message) {}
};

}  // namespace qsparse
