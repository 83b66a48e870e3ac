#ifndef COVERT_KALMAN_ERRORS_HPP
#define COVERT_KALMAN_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace covert_kalman {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iteration failed to converge, a factorization failed, or a value
/// became non-finite.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// An operation that needs a Schur-stable operator received one with
/// spectral radius >= 1.
class UnstableOperator : public Error {
 public:
  using Error::Error;
};

/// Bad caller input (dimensions, ranges, missing fields).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A SystemModel violated one or more of its invariants; `violations()`
/// names each one ("rank-deficient C", "unstabilizable", ...).
class InvalidModel : public Error {
 public:
  InvalidModel(std::vector<std::string> violations, const std::string& detail)
      : Error(join(violations) + ": " + detail), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const noexcept { return violations_; }
  bool has(const std::string& name) const {
    for (const auto& v : violations_) {
      if (v == name) return true;
    }
    return false;
  }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
    return out;
  }
  std::vector<std::string> violations_;
};

class InvalidPartition : public Error {
 public:
  using Error::Error;
};

class MalformedMessage : public Error {
 public:
  using Error::Error;
};

/// The operation does not apply to this model (e.g. an unstable-case design
/// requested for a stable system).
class NotApplicable : public Error {
 public:
  using Error::Error;
};

/// A model passed validation but produced a quantity that validation should
/// have ruled out.
class ModelInconsistency : public Error {
 public:
  using Error::Error;
};

/// Configuration file problem; `path()` is the offending field path.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& detail)
      : Error(path + ": " + detail), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace covert_kalman

#endif  // COVERT_KALMAN_ERRORS_HPP
