#include "imc/common/error.hpp"

namespace imc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid-input";
    case ErrorCode::degenerate_input: return "degenerate-input";
    case ErrorCode::missing_vector: return "missing-vector";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::backend_error: return "backend-error";
    case ErrorCode::micro_loop_error: return "micro-loop-error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

Error Error::verbatim(ErrorCode code, const std::string& what) { return Error(Verbatim{}, code, what); }

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace imc
