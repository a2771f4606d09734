#pragma once

#include <stdexcept>
#include <string>

namespace david {

// Raised for invalid inputs: bad files, malformed cells, shape/schema
// mismatches, out-of-range parameters. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a numeric procedure cannot proceed: non-PD covariance after
// jitter, non-finite loss, singular linear system. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace david
