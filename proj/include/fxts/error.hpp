#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fxts {

enum class ErrorCode {
  input,       // malformed or mismatched input (dimension, syntax)
  parameter,   // a numeric parameter is outside its admissible range
  contract,    // an operation's precondition does not hold
  lookup,      // unknown catalog/system name
  numeric,     // non-finite values, eigensolver failure, step failure
  quadrature,  // quadrature did not converge
  io,          // filesystem failure
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::input: return "input";
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::contract: return "contract";
    case ErrorCode::lookup: return "lookup";
    case ErrorCode::numeric: return "numeric";
    case ErrorCode::quadrature: return "quadrature";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library. `module()` names the component that
/// raised it so that the CLI can emit module-qualified error codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, const std::string& what)
      : std::runtime_error(what), code_(code), module_(std::move(module)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }
  std::string qualified_code() const { return module_ + "." + std::string(to_string(code_)); }

 private:
  ErrorCode code_;
  std::string module_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCode code, std::string module, const std::string& what) {
  throw Error(code, std::move(module), what);
}

inline void require(bool ok, ErrorCode code, const char* module, const std::string& what) {
  if (!ok) fail(code, module, what);
}

}  // namespace detail
}  // namespace fxts
