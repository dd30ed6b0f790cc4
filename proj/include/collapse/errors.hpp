#pragma once

#include <stdexcept>
#include <string>

namespace collapse {

/// Caller broke a documented precondition (dimension mismatch, bad width, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A quadrature or frequency box that cannot meet its tail-mass rule, or a
/// malformed run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A construction that would exceed a configured size cap.
class ResourceError : public std::runtime_error {
 public:
  ResourceError(const std::string& what, std::size_t required)
      : std::runtime_error(what), required_(required) {}
  std::size_t required() const noexcept { return required_; }

 private:
  std::size_t required_;
};

/// A point construction whose admissible region is empty.
class ConstructionError : public std::runtime_error {
 public:
  ConstructionError(const std::string& what, std::size_t achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  std::size_t achieved() const noexcept { return achieved_; }

 private:
  std::size_t achieved_;
};

/// A grid too small for the data it must hold.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}
}  // namespace detail

}  // namespace collapse
