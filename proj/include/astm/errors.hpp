#pragma once

#include <stdexcept>
#include <string>

namespace astm {

/// A point, set, or argument lies outside the domain an operation is defined on.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inconsistent or unsupported configuration (bad parameters, unsupported
/// geometry/set/composite combination, unparsable config file).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace astm
