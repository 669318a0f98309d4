#pragma once

#include <stdexcept>
#include <string>

namespace holosplat {

// Failure categories map onto CLI exit codes (see tools/holosplat.cpp).
enum class ErrorCategory { config = 2, io = 3, numeric = 4, invalid_argument = 5, parse = 6 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

inline Error invalid_argument(const std::string& what) {
  return Error(ErrorCategory::invalid_argument, what);
}

inline Error numeric_error(const std::string& what) {
  return Error(ErrorCategory::numeric, what);
}

inline Error config_error(const std::string& what) {
  return Error(ErrorCategory::config, what);
}

inline Error io_error(const std::string& what) {
  return Error(ErrorCategory::io, what);
}

}  // namespace holosplat
