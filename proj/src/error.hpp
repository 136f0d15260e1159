#ifndef STK_ERROR_HPP
#define STK_ERROR_HPP

#include <stdexcept>
#include <string>

namespace stk {

// Error families map 1:1 onto the C API status codes and CLI exit codes.
enum class ErrorKind {
  Validation,  // bad input values (invariant violations, bad flags)
  Structure,   // malformed stroke-5 sequences (missing/duplicated End, ...)
  Io,          // missing files, unreadable/unwritable paths
  Numeric,     // NaN/Inf produced by a tensor op
  Config,      // unknown keys, schema violations in config files
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string msg)
      : std::runtime_error(std::move(msg)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& msg) {
  throw Error(ErrorKind::Validation, msg);
}
[[noreturn]] inline void fail_structure(const std::string& msg) {
  throw Error(ErrorKind::Structure, msg);
}
[[noreturn]] inline void fail_io(const std::string& msg) {
  throw Error(ErrorKind::Io, msg);
}
[[noreturn]] inline void fail_numeric(const std::string& msg) {
  throw Error(ErrorKind::Numeric, msg);
}
[[noreturn]] inline void fail_config(const std::string& msg) {
  throw Error(ErrorKind::Config, msg);
}

}  // namespace stk

#endif
