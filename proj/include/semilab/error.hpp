#pragma once

#include <stdexcept>
#include <string>

namespace semilab {

// Numeric values are part of the C ABI (see semilab.h); do not renumber.
enum class ErrorCode : int {
  invalid_argument = 1,
  invalid_resolution = 2,
  grid_mismatch = 3,
  missing_boundary = 4,
  nonconvergence = 5,
  overflow = 6,
  domain = 7,
  placement = 8,
  consistency = 9,
  range = 10,
  config = 11,
  io = 12,
  internal = 13,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace semilab
