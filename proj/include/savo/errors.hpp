#pragma once

#include <stdexcept>
#include <string>

namespace savo {

// Error taxonomy shared by the library and the CLI exit-code mapping.
enum class ErrorKind {
  InvalidArgument,    // bad shapes, violated preconditions
  DegenerateRotation, // log map at a rotation angle within tolerance of pi
  Parse,              // malformed text input (pose files, config files)
  Io,                 // missing/undecodable files, write failures
  Numeric,            // non-finite values where finite ones are required
  InsufficientData,   // e.g. covariance fit with fewer than two samples
  Config,             // unknown or invalid configuration keys/values
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_invalid(const std::string& msg) {
  throw Error(ErrorKind::InvalidArgument, msg);
}
[[noreturn]] inline void throw_degenerate(const std::string& msg) {
  throw Error(ErrorKind::DegenerateRotation, msg);
}
[[noreturn]] inline void throw_parse(const std::string& msg) {
  throw Error(ErrorKind::Parse, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
  throw Error(ErrorKind::Io, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
  throw Error(ErrorKind::Numeric, msg);
}
[[noreturn]] inline void throw_insufficient(const std::string& msg) {
  throw Error(ErrorKind::InsufficientData, msg);
}
[[noreturn]] inline void throw_config(const std::string& msg) {
  throw Error(ErrorKind::Config, msg);
}

}  // namespace savo
