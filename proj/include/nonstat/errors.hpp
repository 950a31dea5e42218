#ifndef NONSTAT_ERRORS_HPP
#define NONSTAT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nonstat {

// Bad user input (CLI maps this to exit code 1).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A computation was refused because it exceeds a configured cost cap
// (CLI maps this to exit code 2; most caps can be lifted with --force).
struct CostCapError : std::runtime_error {
  explicit CostCapError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nonstat

#endif
