#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace imc {

enum class ErrorCode {
  invalid_input,
  degenerate_input,
  missing_vector,
  parse_error,
  io_error,
  backend_error,
  micro_loop_error,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the toolkit; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  // Keeps `what` as given, without the code prefix (replayed failures).
  static Error verbatim(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  struct Verbatim {};
  Error(Verbatim, ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::invalid_input, message);
}

}  // namespace imc
