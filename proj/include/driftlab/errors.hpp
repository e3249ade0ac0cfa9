#pragma once

#include <stdexcept>
#include <string>

namespace driftlab {

// Error taxonomy mirrored by the CLI exit codes below. Every throw site
// states what was violated and, for file input, where (path, line, column).
enum class ErrorKind {
  Config,  // invalid scenario/run configuration, unknown keys, bad flags
  Io,      // missing or unwritable files
  Data,    // schema violations, referential integrity, malformed rows
  Eval,    // degenerate evaluation inputs (single-class labels, empty splits)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& msg) {
  throw Error(ErrorKind::Config, "config error: " + msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(ErrorKind::Io, "io error: " + msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) {
  throw Error(ErrorKind::Data, "data error: " + msg);
}
[[noreturn]] inline void throw_eval(const std::string& msg) {
  throw Error(ErrorKind::Eval, "evaluation error: " + msg);
}

// Process exit codes, one per error kind. Documented in README and --help.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;   // bad flags or config (ErrorKind::Config)
inline constexpr int kExitIo = 3;      // ErrorKind::Io
inline constexpr int kExitData = 4;    // ErrorKind::Data
inline constexpr int kExitEval = 5;    // ErrorKind::Eval
inline constexpr int kExitInternal = 7;  // unexpected exception

inline int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Config: return kExitUsage;
    case ErrorKind::Io: return kExitIo;
    case ErrorKind::Data: return kExitData;
    case ErrorKind::Eval: return kExitEval;
  }
  return kExitInternal;
}

}  // namespace driftlab
