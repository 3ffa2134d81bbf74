#pragma once

#include <stdexcept>
#include <string>

namespace sqg {

/// Precondition or input validation failure (bad arguments, mismatched
/// domains, malformed config). Maps to CLI exit code 1.
class UsageError : public std::invalid_argument {
public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace sqg
