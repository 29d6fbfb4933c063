#include "imc/sms/trace_io.hpp"

#include <algorithm>
#include <fstream>

#include "imc/common/error.hpp"
#include "imc/common/resources.hpp"
#include "json.hpp"

namespace imc::sms {

using nlohmann::json;

namespace {

constexpr const char* kTraceFormat = "imc-denoise-trace";

json opt(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> opt_str(const json& j, const char* name) {
  if (!j.contains(name) || j.at(name).is_null()) return std::nullopt;
  return j.at(name).get<std::string>();
}

json call_json(const CallRecord& c) {
  return {{"role", std::string(to_string(c.role))},
          {"user_content", c.user_content},
          {"image_ref", opt(c.image_ref)},
          {"temperature", c.temperature},
          {"seed", c.seed},
          {"reply", c.reply},
          {"error", opt(c.error)}};
}

CallRecord call_from(const json& j) {
  CallRecord c;
  const auto role = parse_role(j.at("role").get<std::string>());
  if (!role) fail(ErrorCode::parse_error, "trace: unknown agent role '" + j.at("role").get<std::string>() + "'");
  c.role = *role;
  c.user_content = j.at("user_content").get<std::string>();
  c.image_ref = opt_str(j, "image_ref");
  c.temperature = j.at("temperature").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.reply = j.at("reply").get<std::string>();
  c.error = opt_str(j, "error");
  return c;
}

}  // namespace

std::string dump_trace(const DenoiseTrace& trace) {
  json doc;
  doc["format"] = kTraceFormat;
  doc["version"] = kTraceFormatVersion;
  doc["input"] = trace.input;
  doc["image_ref"] = opt(trace.image_ref);
  doc["config"] = {{"k", trace.config.k},
                   {"n", trace.config.n},
                   {"max_micro_iters", trace.config.max_micro_iters},
                   {"t0", trace.config.t0},
                   {"halving", trace.config.halving}};
  doc["seed"] = trace.seed;
  json rounds = json::array();
  for (const auto& r : trace.rounds) {
    json micros = json::array();
    for (const auto& m : r.micros) {
      json calls = json::array();
      for (const auto& c : m.calls) calls.push_back(call_json(c));
      micros.push_back({{"run", m.run},
                        {"seed", m.seed},
                        {"input", m.input},
                        {"candidate", m.candidate},
                        {"failed", m.failed},
                        {"error", m.error},
                        {"iterations", m.iterations},
                        {"calls", calls}});
    }
    rounds.push_back({{"index", r.index},
                      {"input", r.input},
                      {"temperature", r.temperature},
                      {"micros", micros},
                      {"selector", r.selector ? call_json(*r.selector) : json(nullptr)},
                      {"selection", opt(r.selection)},
                      {"validator", r.validator ? call_json(*r.validator) : json(nullptr)},
                      {"valid", r.valid},
                      {"carried", r.carried}});
  }
  doc["rounds"] = rounds;
  doc["final"] = trace.final_text;
  doc["call_count"] = trace.call_count();
  return doc.dump(1) + "\n";
}

DenoiseTrace parse_trace(const std::string& text) {
  try {
    const auto doc = json::parse(text);
    if (doc.at("format").get<std::string>() != kTraceFormat) fail(ErrorCode::parse_error, "not a denoise trace");
    if (doc.at("version").get<int>() != kTraceFormatVersion)
      fail(ErrorCode::parse_error, "trace format version " + std::to_string(doc.at("version").get<int>()) +
                                       " is not supported");
    DenoiseTrace t;
    t.input = doc.at("input").get<std::string>();
    t.image_ref = opt_str(doc, "image_ref");
    const auto& cfg = doc.at("config");
    t.config.k = cfg.at("k").get<std::size_t>();
    t.config.n = cfg.at("n").get<std::size_t>();
    t.config.max_micro_iters = cfg.at("max_micro_iters").get<std::size_t>();
    t.config.t0 = cfg.at("t0").get<double>();
    t.config.halving = cfg.at("halving").get<bool>();
    t.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& jr : doc.at("rounds")) {
      MacroRound r;
      r.index = jr.at("index").get<std::size_t>();
      r.input = jr.at("input").get<std::string>();
      r.temperature = jr.at("temperature").get<double>();
      for (const auto& jm : jr.at("micros")) {
        MicroTranscript m;
        m.run = jm.at("run").get<std::size_t>();
        m.seed = jm.at("seed").get<std::uint64_t>();
        m.input = jm.at("input").get<std::string>();
        m.candidate = jm.at("candidate").get<std::string>();
        m.failed = jm.at("failed").get<bool>();
        m.error = jm.at("error").get<std::string>();
        m.iterations = jm.at("iterations").get<std::size_t>();
        for (const auto& jc : jm.at("calls")) m.calls.push_back(call_from(jc));
        r.micros.push_back(std::move(m));
      }
      if (!jr.at("selector").is_null()) r.selector = call_from(jr.at("selector"));
      r.selection = opt_str(jr, "selection");
      if (!jr.at("validator").is_null()) r.validator = call_from(jr.at("validator"));
      r.valid = jr.at("valid").get<bool>();
      r.carried = jr.at("carried").get<std::string>();
      t.rounds.push_back(std::move(r));
    }
    t.final_text = doc.at("final").get<std::string>();
    return t;
  } catch (const json::exception& e) {
    fail(ErrorCode::parse_error, std::string("malformed denoise trace: ") + e.what());
  }
}

void save_trace(const std::string& path, const DenoiseTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io_error, "cannot write '" + path + "'");
  out << dump_trace(trace);
  if (!out) fail(ErrorCode::io_error, "failed writing '" + path + "'");
}

DenoiseTrace load_trace(const std::string& path) { return parse_trace(resources::read_file(path)); }

ReplayBackend::ReplayBackend(const DenoiseTrace& trace) {
  auto add = [&](const CallRecord& c) {
    calls_[{c.role, c.user_content, c.image_ref.value_or(""), c.temperature, c.seed}].push_back(c);
  };
  for (const auto& r : trace.rounds) {
    for (const auto& m : r.micros)
      for (const auto& c : m.calls) add(c);
    if (r.selector) add(*r.selector);
    if (r.validator) add(*r.validator);
  }
}

std::string ReplayBackend::call(const ChatRequest& request) {
  const Key key{request.role, request.user_content, request.image_ref.value_or(""), request.temperature, request.seed};
  CallRecord rec;
  {
    std::lock_guard lock(mutex_);
    const auto it = calls_.find(key);
    if (it == calls_.end())
      fail(ErrorCode::backend_error, "replay has no recorded " + std::string(to_string(request.role)) + " call for this request");
    auto& next = next_[key];
    // Identical requests replay in recorded order; extra repeats reuse the last.
    rec = it->second[std::min(next, it->second.size() - 1)];
    ++next;
  }
  if (rec.error) throw Error::verbatim(ErrorCode::backend_error, *rec.error);
  return rec.reply;
}

DenoiseResult replay(const DenoiseTrace& trace, const PromptSet& prompts) {
  ReplayBackend backend(trace);
  return denoise(trace.input, trace.image_ref, backend, trace.config, trace.seed, prompts);
}

}  // namespace imc::sms
