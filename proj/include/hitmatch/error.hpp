#pragma once

#include <stdexcept>
#include <string>

namespace hitmatch {

enum class ErrorCode {
  invalid_argument,
  out_of_range,
  dimension_mismatch,
  contract_violation,
  io,
  format,
  corrupt_index,
};

// Every failure in the library surfaces as this exception; the C API maps
// the code onto hm_status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace hitmatch
