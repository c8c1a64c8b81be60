#pragma once

#include <stdexcept>
#include <string>

namespace topoforge {

/// Error categories surfaced through the C API as status codes.
enum class ErrorCode {
  InvalidArgument = 1,
  Domain = 2,
  SingularGeometry = 3,
  SingularSystem = 4,
  Parse = 5,
  Io = 6,
  Numeric = 7,
  Infeasible = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace topoforge
