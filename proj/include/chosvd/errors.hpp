#pragma once

#include <stdexcept>
#include <string>

namespace chosvd {

// Error taxonomy shared by the library and the command-line driver.
// UsageError: the caller asked for something malformed (bad shapes, bad
// flags, out-of-range parameters).  DataError: the input data itself is
// unusable (unreadable files, non-finite samples, too many gaps).
// NumericalError: an iteration failed to converge within its budget.
// The driver maps these to distinct exit codes.

class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

}  // namespace chosvd
