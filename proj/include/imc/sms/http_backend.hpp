#pragma once

#include <optional>
#include <string>

#include "imc/sms/sms.hpp"

namespace imc::sms {

struct HttpBackendConfig {
  std::string endpoint;  // full URL of a chat-completions route
  std::string api_key;   // sent as a Bearer token when non-empty
  std::string model;
  int timeout_seconds = 120;
};

// Reads IMC_LLM_ENDPOINT (required), IMC_LLM_API_KEY and IMC_LLM_MODEL.
// Throws invalid-input when the endpoint is unset.
HttpBackendConfig http_config_from_env();

// OpenAI-style chat-completions client. The system prompt and user content
// go out as two messages; an image reference that is a URL (http, https,
// data) is forwarded as is, a local file is inlined as a base64 data URL.
// Transport errors, non-2xx statuses and malformed bodies raise
// backend-error. Each call opens its own connection.
class HttpBackend : public ChatBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  std::string call(const ChatRequest& request) override;

  // Exposed for tests.
  std::string request_body(const ChatRequest& request) const;
  static std::string parse_reply(const std::string& body);

 private:
  HttpBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace imc::sms
