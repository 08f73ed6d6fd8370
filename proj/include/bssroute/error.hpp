#pragma once

#include <stdexcept>
#include <string>

namespace bssroute {

enum class ErrorKind {
  invalid_argument = 1,
  io = 2,
  parse = 3,
  numeric = 4,
  routing = 5,
  not_found = 6,
};

// Base exception for the library. The C API maps `kind()` onto status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bssroute
