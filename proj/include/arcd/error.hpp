#pragma once

#include <stdexcept>
#include <string>

namespace arcd {

enum class ErrorKind {
  input,    // malformed files, bad flags, out-of-range parameters
  shape,    // dimension or length mismatch
  numeric,  // NaN / Inf in weights or activations
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_input(const std::string& what) {
  throw Error(ErrorKind::input, what);
}
[[noreturn]] inline void throw_shape(const std::string& what) {
  throw Error(ErrorKind::shape, what);
}
[[noreturn]] inline void throw_numeric(const std::string& what) {
  throw Error(ErrorKind::numeric, what);
}

}  // namespace arcd
