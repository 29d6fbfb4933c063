#pragma once

#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include "imc/sms/sms.hpp"

namespace imc::sms {

inline constexpr int kTraceFormatVersion = 1;

std::string dump_trace(const DenoiseTrace& trace);
DenoiseTrace parse_trace(const std::string& text);
void save_trace(const std::string& path, const DenoiseTrace& trace);
DenoiseTrace load_trace(const std::string& path);

// Answers every request from a recorded trace, keyed on (role, user content,
// image, temperature, seed). Calls recorded as failures throw again.
// Unknown requests throw backend-error.
class ReplayBackend : public ChatBackend {
 public:
  explicit ReplayBackend(const DenoiseTrace& trace);
  std::string call(const ChatRequest& request) override;

 private:
  using Key = std::tuple<AgentRole, std::string, std::string, double, std::uint64_t>;
  // Retries repeat identical requests, so each key holds a queue.
  std::map<Key, std::vector<CallRecord>> calls_;
  std::map<Key, std::size_t> next_;
  std::mutex mutex_;
};

// Re-runs denoise from the trace's own input, config and seed.
DenoiseResult replay(const DenoiseTrace& trace, const PromptSet& prompts = PromptSet::builtin());

}  // namespace imc::sms
