#pragma once

#include <stdexcept>
#include <string>

namespace rcs {

enum class ErrorKind {
  Validation,  // malformed or out-of-range input
  Domain,      // argument outside a function's mathematical domain
  Capacity,    // not enough stacks or cells
  Parse,       // config text could not be parsed
  Io,          // file could not be read or written
  Deadlock,    // simulation cannot make progress
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rcs
