#pragma once

#include <stdexcept>
#include <string>

namespace tsflab {

enum class ErrorCode {
  invalid_argument = 1,
  io = 2,
  parse = 3,
  numeric = 4,
  internal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tsflab
