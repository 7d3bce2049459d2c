#pragma once

#include <stdexcept>
#include <string>

namespace provex {

// Malformed input data: unparseable files, dangling endpoints, bad feature names.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A black-box classifier could not be queried or returned garbage.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition violated by the caller (wrong label source, empty input, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace provex
