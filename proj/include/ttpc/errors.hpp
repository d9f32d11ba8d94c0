#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ttpc {

// Error taxonomy shared across the library. The CLI maps kinds onto exit
// codes: validation problems (bad input, bad files, bad config) exit 2,
// provider/runtime problems exit 3.
enum class ErrKind {
  InvalidInput,
  Parse,
  Schema,
  Io,
  Config,
  Version,
  Auth,
  RateLimit,
  ContextOverflow,
  Transport,
};

class Error : public std::runtime_error {
 public:
  Error(ErrKind k, std::string msg, bool transient = false)
      : std::runtime_error(std::move(msg)), kind(k), transient(transient) {}

  ErrKind kind;
  bool transient;                      // provider failure worth retrying
  std::size_t byte_offset = kNoByte;   // set for parse errors when known

  static constexpr std::size_t kNoByte = static_cast<std::size_t>(-1);
};

[[noreturn]] inline void raise(ErrKind k, const std::string& msg,
                               bool transient = false) {
  throw Error(k, msg, transient);
}

[[noreturn]] inline void raise_parse(const std::string& msg,
                                     std::size_t byte_offset) {
  Error e(ErrKind::Parse, msg);
  e.byte_offset = byte_offset;
  throw e;
}

inline bool is_validation_error(ErrKind k) {
  switch (k) {
    case ErrKind::InvalidInput:
    case ErrKind::Parse:
    case ErrKind::Schema:
    case ErrKind::Config:
    case ErrKind::Version:
      return true;
    default:
      return false;
  }
}

}  // namespace ttpc
