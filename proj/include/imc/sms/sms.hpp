#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "imc/common/defaults.hpp"

namespace imc::sms {

enum class AgentRole { classifier_denoiser, residual_checker, optimal_selector, output_validator };

inline constexpr std::array<AgentRole, 4> kAllRoles = {AgentRole::classifier_denoiser, AgentRole::residual_checker,
                                                       AgentRole::optimal_selector, AgentRole::output_validator};

std::string_view to_string(AgentRole role);
std::optional<AgentRole> parse_role(std::string_view name);

struct ChatRequest {
  AgentRole role = AgentRole::classifier_denoiser;
  std::string system_prompt;
  std::string user_content;
  std::optional<std::string> image_ref;  // opaque; only the backend looks at it
  double temperature = defaults::kInitialTemperature;
  std::uint64_t seed = 0;
};

// One chat exchange. Implementations must tolerate concurrent calls and
// report failures by throwing imc::Error (backend-error) or any
// std::exception.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string call(const ChatRequest& request) = 0;
};

// ---- prompts --------------------------------------------------------------

inline constexpr std::string_view kOriginalQuestion = "Original_Question";
inline constexpr std::string_view kPredictionResult = "Possible_Prediction_Result";
inline constexpr std::string_view kPredictionResults = "Possible_Prediction_Results";

struct PromptTemplate {
  std::string system;
  std::string user;
};

// Template files have a "[system]" section followed by a "[user]" section.
// The user section carries {Placeholder} slots.
PromptTemplate parse_template(const std::string& text, const std::string& source);

class PromptSet {
 public:
  static PromptSet builtin();
  // Reads <dir>/<role>.txt for all four roles.
  static PromptSet load_dir(const std::string& dir);

  const PromptTemplate& at(AgentRole role) const;
  void set(AgentRole role, PromptTemplate t);

  // Fills the user section. Throws invalid-input when the template uses a
  // placeholder that has no value.
  ChatRequest render(AgentRole role, const std::map<std::string, std::string, std::less<>>& values) const;

 private:
  std::map<AgentRole, PromptTemplate> templates_;
};

// ---- reply grammar --------------------------------------------------------

enum class VerdictKind { clean, noisy, valid, invalid, selection };

struct Verdict {
  VerdictKind kind = VerdictKind::noisy;
  std::string text;  // selection only
  bool parsed = false;  // false: no marker found, kind is the conservative default
};

// Case-insensitive scan for "RESULT: CLEAN|NOISY", "VERDICT: VALID|INVALID"
// and ```answer fenced blocks; the marker that starts last wins. No marker
// gives noisy.
Verdict parse_verdict(std::string_view reply);

// Content of the last ```answer block, trimmed; nullopt if there is none.
std::optional<std::string> extract_answer(std::string_view reply);

// Reply helpers used by mocks and tests.
std::string answer_block(std::string_view text);

// ---- orchestration --------------------------------------------------------

struct LoopConfig {
  std::size_t k = defaults::kMicroLoops;
  std::size_t n = defaults::kMacroRounds;
  std::size_t max_micro_iters = defaults::kMaxMicroIters;
  double t0 = defaults::kInitialTemperature;
  bool halving = true;
};

void validate(const LoopConfig& cfg);

// Upper bound on backend calls for one denoise run, retries included.
std::size_t call_budget(const LoopConfig& cfg);

struct CallRecord {
  AgentRole role = AgentRole::classifier_denoiser;
  std::string user_content;
  std::optional<std::string> image_ref;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  std::string reply;
  std::optional<std::string> error;  // set when the call threw
};

struct MicroTranscript {
  std::size_t run = 0;
  std::uint64_t seed = 0;
  std::string input;
  std::string candidate;
  bool failed = false;  // candidate fell back to the input
  std::string error;
  std::size_t iterations = 0;  // checker verdicts obtained
  std::vector<CallRecord> calls;
};

struct MacroRound {
  std::size_t index = 0;
  std::string input;
  double temperature = 0.0;
  std::vector<MicroTranscript> micros;
  std::optional<CallRecord> selector;
  std::optional<std::string> selection;
  std::optional<CallRecord> validator;
  bool valid = false;
  std::string carried;
};

struct DenoiseTrace {
  std::string input;
  std::optional<std::string> image_ref;
  LoopConfig config;
  std::uint64_t seed = 0;
  std::vector<MacroRound> rounds;
  std::string final_text;

  std::size_t call_count() const;
};

// Seed of micro run `run` in macro round `round`.
std::uint64_t micro_seed(std::uint64_t base_seed, std::size_t round, std::size_t run);

// Denoiser/checker alternation. Stops on a CLEAN verdict or after
// max_micro_iters checker verdicts. A failed call is retried once; the
// run's calls (retries included) never exceed 2*max_micro_iters. Throws
// micro-loop-error when a call fails twice or the budget is spent on
// failures; the partial transcript is returned through `transcript`.
std::string run_micro(const std::string& sentence, ChatBackend& backend, double temperature, const LoopConfig& cfg,
                      std::uint64_t seed, const PromptSet& prompts, MicroTranscript& transcript);

// k runs in parallel; slot i uses micro_seed(base_seed, round, i). Failed
// runs carry the input sentence and are flagged.
std::vector<MicroTranscript> run_parallel_micros(const std::string& sentence, ChatBackend& backend, double temperature,
                                                 const LoopConfig& cfg, std::uint64_t base_seed, std::size_t round,
                                                 const PromptSet& prompts);

MacroRound run_macro_round(const std::string& sentence, const std::optional<std::string>& image_ref,
                           ChatBackend& backend, double temperature, const LoopConfig& cfg, std::uint64_t base_seed,
                           std::size_t round, const PromptSet& prompts);

struct DenoiseResult {
  std::string final_text;
  DenoiseTrace trace;
};

DenoiseResult denoise(const std::string& sentence, const std::optional<std::string>& image_ref, ChatBackend& backend,
                      const LoopConfig& cfg, std::uint64_t seed, const PromptSet& prompts = PromptSet::builtin());

}  // namespace imc::sms
