#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace metastab {

/// A documented precondition of an operation does not hold for its inputs.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative procedure ran out of budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A local minimum whose Hessian has an eigenvalue below the declared curvature m.
class DegenerateMinimumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A simulated iterate left the finite doubles. Carries the first bad index
/// and, inside replica batches, the replica it happened in.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t index, const std::string& what, std::optional<std::size_t> replica = std::nullopt)
      : std::runtime_error(what), index_(index), replica_(replica) {}
  std::size_t index() const noexcept { return index_; }
  std::optional<std::size_t> replica() const noexcept { return replica_; }

 private:
  std::size_t index_;
  std::optional<std::size_t> replica_;
};

/// Malformed experiment configuration. `path()` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace metastab
