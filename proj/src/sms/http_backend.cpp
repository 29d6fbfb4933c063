#include "imc/sms/http_backend.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>

#include "httplib.h"
#include "imc/common/error.hpp"
#include "imc/common/resources.hpp"
#include "json.hpp"

namespace imc::sms {

using nlohmann::json;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

std::string base64(const std::string& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string mime_for(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".pgm") return "image/x-portable-graymap";
  return "application/octet-stream";
}

std::string image_url(const std::string& ref) {
  for (const char* scheme : {"http://", "https://", "data:"})
    if (ref.rfind(scheme, 0) == 0) return ref;
  return "data:" + mime_for(ref) + ";base64," + base64(resources::read_file(ref));
}

}  // namespace

HttpBackendConfig http_config_from_env() {
  HttpBackendConfig c;
  c.endpoint = env_or("IMC_LLM_ENDPOINT", "");
  require(!c.endpoint.empty(), "IMC_LLM_ENDPOINT is not set; the http backend needs a chat-completions URL");
  c.api_key = env_or("IMC_LLM_API_KEY", "");
  c.model = env_or("IMC_LLM_MODEL", "");
  return c;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  const auto scheme_end = config_.endpoint.find("://");
  require(scheme_end != std::string::npos, "endpoint '" + config_.endpoint + "' is not an http(s) URL");
  const auto scheme = config_.endpoint.substr(0, scheme_end);
  require(scheme == "http" || scheme == "https", "endpoint '" + config_.endpoint + "' is not an http(s) URL");
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  scheme_host_port_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
}

std::string HttpBackend::request_body(const ChatRequest& request) const {
  json user;
  if (request.image_ref) {
    user = json::array({{{"type", "text"}, {"text", request.user_content}},
                        {{"type", "image_url"}, {"image_url", {{"url", image_url(*request.image_ref)}}}}});
  } else {
    user = request.user_content;
  }
  json body = {{"messages", json::array({{{"role", "system"}, {"content", request.system_prompt}},
                                         {{"role", "user"}, {"content", user}}})},
               {"temperature", request.temperature},
               {"seed", request.seed}};
  if (!config_.model.empty()) body["model"] = config_.model;
  return body.dump();
}

std::string HttpBackend::parse_reply(const std::string& body) {
  try {
    const auto doc = json::parse(body);
    const auto& content = doc.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    // Some servers answer with a list of typed parts.
    std::string out;
    for (const auto& part : content)
      if (part.value("type", "") == "text") out += part.at("text").get<std::string>();
    return out;
  } catch (const json::exception& e) {
    fail(ErrorCode::backend_error, std::string("malformed chat-completions reply: ") + e.what());
  }
}

std::string HttpBackend::call(const ChatRequest& request) {
  const auto body = request_body(request);
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_write_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const auto res = client.Post(path_, headers, body, "application/json");
  if (!res)
    fail(ErrorCode::backend_error, "request to " + config_.endpoint + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    fail(ErrorCode::backend_error, "request to " + config_.endpoint + " returned HTTP " + std::to_string(res->status));
  return parse_reply(res->body);
}

}  // namespace imc::sms
