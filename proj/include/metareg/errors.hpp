#pragma once

#include <stdexcept>
#include <string>

namespace metareg {

/// Rejected input: bad dimensions, non-finite values, rank deficiency, ...
class ValidationError : public std::invalid_argument {
 public:
  enum class Kind { empty_input, dimension_mismatch, non_finite, invalid_value, rank_deficient };

  ValidationError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// The requested quantity requires proper priors (or another precondition
/// the problem does not meet).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The heterogeneity posterior cannot be normalized.
class NonNormalizableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace metareg
