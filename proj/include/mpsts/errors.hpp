// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mpsts {

// Failure categories.  The numeric values double as process exit codes for
// the command-line tool, so they must stay distinct and nonzero.
enum class errc : int {
    parameter_domain = 2,    // argument outside its documented domain
    io_failure = 3,          // file could not be read, parsed, or written
    estimation_failure = 4,  // optimizer did not converge or model degenerate
    insufficient_data = 5,   // too few samples for the requested statistic
    unphysical_data = 6,     // data violate a physical bound (e.g. noise floor)
    no_acceptance = 7,       // conditional simulation never met its condition
};

class error : public std::runtime_error {
  public:
    error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    errc code() const noexcept { return code_; }

  private:
    errc code_;
};

inline void require(bool condition, errc code, const std::string& what) {
    if (!condition) throw error(code, what);
}

}  // namespace mpsts
