#include <cmath>

#include "imc/common/error.hpp"
#include "imc/common/parallel.hpp"
#include "imc/common/rng.hpp"
#include "imc/sms/sms.hpp"

namespace imc::sms {

void validate(const LoopConfig& cfg) {
  require(cfg.k >= 1, "need at least one micro loop (k >= 1)");
  require(cfg.n >= 1, "need at least one macro round (n >= 1)");
  require(cfg.max_micro_iters >= 1, "max_micro_iters must be at least 1");
  require(std::isfinite(cfg.t0) && cfg.t0 > 0.0 && cfg.t0 <= 2.0, "initial temperature must lie in (0, 2]");
}

std::size_t call_budget(const LoopConfig& cfg) { return cfg.n * (cfg.k * 2 * cfg.max_micro_iters + 2); }

std::size_t DenoiseTrace::call_count() const {
  std::size_t n = 0;
  for (const auto& r : rounds) {
    for (const auto& m : r.micros) n += m.calls.size();
    n += r.selector.has_value() + r.validator.has_value();
  }
  return n;
}

std::uint64_t micro_seed(std::uint64_t base_seed, std::size_t round, std::size_t run) {
  return derive_key({base_seed, round, run});
}

namespace {

CallRecord record_of(const ChatRequest& req) {
  CallRecord c;
  c.role = req.role;
  c.user_content = req.user_content;
  c.image_ref = req.image_ref;
  c.temperature = req.temperature;
  c.seed = req.seed;
  return c;
}

// One backend call, recorded whether or not it succeeds.
std::optional<std::string> try_call(ChatBackend& backend, const ChatRequest& req, std::vector<CallRecord>& log) {
  log.push_back(record_of(req));
  try {
    log.back().reply = backend.call(req);
    return log.back().reply;
  } catch (const std::exception& e) {
    log.back().error = e.what();
    return std::nullopt;
  }
}

// Micro-loop call with one retry, charged to the run's call budget.
class MicroCaller {
 public:
  MicroCaller(ChatBackend& backend, MicroTranscript& transcript, std::size_t budget)
      : backend_(backend), transcript_(transcript), budget_(budget) {}

  bool exhausted() const { return transcript_.calls.size() >= budget_; }

  std::string call(const ChatRequest& req) {
    for (int attempt = 0; attempt < 2; ++attempt) {
      if (exhausted()) break;
      if (auto reply = try_call(backend_, req, transcript_.calls)) return *reply;
    }
    const auto& last = transcript_.calls.back();
    fail(ErrorCode::micro_loop_error, "micro run " + std::to_string(transcript_.run) + ": " +
                                          std::string(to_string(req.role)) + " call failed: " +
                                          last.error.value_or("call budget exhausted"));
  }

 private:
  ChatBackend& backend_;
  MicroTranscript& transcript_;
  std::size_t budget_;
};

std::string numbered(const std::vector<MicroTranscript>& micros) {
  std::string out;
  for (std::size_t i = 0; i < micros.size(); ++i) {
    if (i) out += '\n';
    out += "[" + std::to_string(i + 1) + "] " + micros[i].candidate;
  }
  return out;
}

}  // namespace

std::string run_micro(const std::string& sentence, ChatBackend& backend, double temperature, const LoopConfig& cfg,
                      std::uint64_t seed, const PromptSet& prompts, MicroTranscript& transcript) {
  require(!sentence.empty(), "cannot denoise an empty sentence");
  validate(cfg);
  transcript.seed = seed;
  transcript.input = sentence;
  transcript.iterations = 0;
  transcript.calls.clear();
  MicroCaller caller(backend, transcript, 2 * cfg.max_micro_iters);

  std::string current = sentence;
  std::uint64_t step = 0;
  for (std::size_t iter = 0; iter < cfg.max_micro_iters && !caller.exhausted(); ++iter) {
    auto den = prompts.render(AgentRole::classifier_denoiser, {{std::string(kOriginalQuestion), current}});
    den.temperature = temperature;
    den.seed = derive_key({seed, step++});
    // A reply without an answer block leaves the sentence as it was.
    if (auto answer = extract_answer(caller.call(den)); answer && !answer->empty()) current = *answer;
    transcript.candidate = current;
    if (caller.exhausted()) break;

    auto chk = prompts.render(AgentRole::residual_checker, {{std::string(kPredictionResult), current}});
    chk.temperature = temperature;
    chk.seed = derive_key({seed, step++});
    const auto verdict = parse_verdict(caller.call(chk));
    ++transcript.iterations;
    if (verdict.kind == VerdictKind::clean) break;
  }
  transcript.candidate = current;
  return current;
}

std::vector<MicroTranscript> run_parallel_micros(const std::string& sentence, ChatBackend& backend, double temperature,
                                                 const LoopConfig& cfg, std::uint64_t base_seed, std::size_t round,
                                                 const PromptSet& prompts) {
  validate(cfg);
  std::vector<MicroTranscript> out(cfg.k);
  parallel_for(cfg.k, [&](std::size_t i) {
    auto& t = out[i];
    t.run = i;
    try {
      run_micro(sentence, backend, temperature, cfg, micro_seed(base_seed, round, i), prompts, t);
    } catch (const Error& e) {
      t.failed = true;
      t.error = e.what();
      t.candidate = sentence;
    }
  });
  return out;
}

MacroRound run_macro_round(const std::string& sentence, const std::optional<std::string>& image_ref,
                           ChatBackend& backend, double temperature, const LoopConfig& cfg, std::uint64_t base_seed,
                           std::size_t round, const PromptSet& prompts) {
  MacroRound r;
  r.index = round;
  r.input = sentence;
  r.temperature = temperature;
  r.carried = sentence;
  r.micros = run_parallel_micros(sentence, backend, temperature, cfg, base_seed, round, prompts);

  std::vector<CallRecord> log;
  auto sel = prompts.render(AgentRole::optimal_selector, {{std::string(kOriginalQuestion), sentence},
                                                          {std::string(kPredictionResults), numbered(r.micros)}});
  sel.image_ref = image_ref;
  sel.temperature = temperature;
  sel.seed = derive_key({base_seed, round, hash_string("selector")});
  const auto sel_reply = try_call(backend, sel, log);
  r.selector = log.back();
  if (!sel_reply) return r;
  const auto picked = parse_verdict(*sel_reply);
  if (picked.kind != VerdictKind::selection || picked.text.empty()) return r;
  r.selection = picked.text;

  auto val = prompts.render(AgentRole::output_validator,
                            {{std::string(kOriginalQuestion), sentence}, {std::string(kPredictionResult), picked.text}});
  val.temperature = temperature;
  val.seed = derive_key({base_seed, round, hash_string("validator")});
  const auto val_reply = try_call(backend, val, log);
  r.validator = log.back();
  if (!val_reply) return r;
  r.valid = parse_verdict(*val_reply).kind == VerdictKind::valid;
  if (r.valid) r.carried = picked.text;
  return r;
}

DenoiseResult denoise(const std::string& sentence, const std::optional<std::string>& image_ref, ChatBackend& backend,
                      const LoopConfig& cfg, std::uint64_t seed, const PromptSet& prompts) {
  validate(cfg);
  require(!sentence.empty(), "cannot denoise an empty sentence");
  DenoiseResult out;
  auto& trace = out.trace;
  trace.input = sentence;
  trace.image_ref = image_ref;
  trace.config = cfg;
  trace.seed = seed;

  std::string current = sentence;
  double t = cfg.t0;
  for (std::size_t round = 0; round < cfg.n; ++round) {
    trace.rounds.push_back(run_macro_round(current, image_ref, backend, t, cfg, seed, round, prompts));
    const auto& r = trace.rounds.back();
    current = r.carried;
    if (r.valid && cfg.halving) t /= 2.0;
  }
  trace.final_text = current;
  out.final_text = current;
  return out;
}

}  // namespace imc::sms
