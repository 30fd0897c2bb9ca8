#pragma once

#include <stdexcept>
#include <string>

namespace relfilter {

// Problems with the data being processed: malformed records, degenerate
// training sets, non-finite numerics. The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments or configuration from the caller. Exit code 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace relfilter
