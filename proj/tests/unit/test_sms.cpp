#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "imc/common/error.hpp"
#include "imc/common/resources.hpp"
#include "imc/sms/http_backend.hpp"
#include "imc/sms/mock.hpp"
#include "imc/sms/trace_io.hpp"
#include "json.hpp"
#include "support/sms_cases.hpp"

using namespace imc;
using namespace imc::sms;

namespace {

const std::string kQuestions = std::string(IMC_TEST_DATA_DIR) + "/questions.txt";

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an imc::Error");
  return ErrorCode::io_error;
}

Dictionary question_dictionary() { return Dictionary::from_text(resources::read_file(kQuestions)); }

LoopConfig small(std::size_t k, std::size_t n, std::size_t iters = 3) {
  LoopConfig c;
  c.k = k;
  c.n = n;
  c.max_micro_iters = iters;
  return c;
}

std::string reply_for(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::clean: return "RESULT: CLEAN";
    case VerdictKind::noisy: return "RESULT: NOISY";
    case VerdictKind::valid: return "VERDICT: VALID";
    case VerdictKind::invalid: return "VERDICT: INVALID";
    case VerdictKind::selection: return answer_block("picked");
  }
  return {};
}

}  // namespace

TEST_SUITE("sms.protocol") {
  TEST_CASE("single markers") {
    CHECK(parse_verdict("RESULT: CLEAN").kind == VerdictKind::clean);
    CHECK(parse_verdict("result:noisy").kind == VerdictKind::noisy);
    CHECK(parse_verdict("Looks fine.\nVerdict:  Valid").kind == VerdictKind::valid);
    CHECK(parse_verdict("VERDICT: INVALID").kind == VerdictKind::invalid);
    const auto sel = parse_verdict("I pick:\n```answer\n  What organ is shown?  \n```\n");
    CHECK(sel.kind == VerdictKind::selection);
    CHECK(sel.text == "What organ is shown?");
  }

  TEST_CASE("unparseable replies are conservative") {
    for (const char* reply : {"", "no idea", "RESULT: VALID", "VERDICT: CLEAN", "VERDICT: VALIDATED", "```answer"}) {
      const auto v = parse_verdict(reply);
      CHECK_FALSE(v.parsed);
      CHECK(v.kind == VerdictKind::noisy);
    }
  }

  TEST_CASE("the last marker wins") {
    const VerdictKind kinds[] = {VerdictKind::clean, VerdictKind::noisy, VerdictKind::valid, VerdictKind::invalid,
                                 VerdictKind::selection};
    for (auto first : kinds)
      for (auto second : kinds) {
        const auto v = parse_verdict(reply_for(first) + "\nthen\n" + reply_for(second));
        CHECK(v.kind == second);
      }
    CHECK(parse_verdict("RESULT: NOISY ... actually RESULT: CLEAN").kind == VerdictKind::clean);
  }

  TEST_CASE("answer extraction takes the last block") {
    CHECK(extract_answer("none") == std::nullopt);
    CHECK(extract_answer("```answer\nfirst\n```\n```answer\nsecond\n```") == "second");
    CHECK(extract_answer(answer_block("x y")) == "x y");
  }

  TEST_CASE("builtin prompts carry their placeholders") {
    const auto p = PromptSet::builtin();
    const auto has = [&](AgentRole r, std::string_view name) {
      return p.at(r).user.find("{" + std::string(name) + "}") != std::string::npos;
    };
    CHECK(has(AgentRole::classifier_denoiser, kOriginalQuestion));
    CHECK(has(AgentRole::residual_checker, kPredictionResult));
    CHECK(has(AgentRole::optimal_selector, kOriginalQuestion));
    CHECK(has(AgentRole::optimal_selector, kPredictionResults));
    CHECK(has(AgentRole::output_validator, kOriginalQuestion));
    CHECK(has(AgentRole::output_validator, kPredictionResult));
    CHECK(p.at(AgentRole::residual_checker).system.find("RESULT: CLEAN") != std::string::npos);
    CHECK(p.at(AgentRole::output_validator).system.find("VERDICT: VALID") != std::string::npos);
  }

  TEST_CASE("shipped prompt files equal the builtin copies") {
    const auto shipped = PromptSet::load_dir(std::string(IMC_CONFIG_DIR) + "/prompts");
    const auto builtin = PromptSet::builtin();
    for (auto r : kAllRoles) {
      CHECK(shipped.at(r).system == builtin.at(r).system);
      CHECK(shipped.at(r).user == builtin.at(r).user);
    }
  }

  TEST_CASE("rendering") {
    const auto p = PromptSet::builtin();
    const auto req = p.render(AgentRole::classifier_denoiser, {{"Original_Question", "Is {this} ok?"}});
    CHECK(req.user_content.find("Original_Question: Is {this} ok?") != std::string::npos);
    CHECK(req.role == AgentRole::classifier_denoiser);
    CHECK(req.system_prompt == p.at(AgentRole::classifier_denoiser).system);
    CHECK(code_of([&] { p.render(AgentRole::output_validator, {{"Original_Question", "q"}}); }) ==
          ErrorCode::invalid_input);
    CHECK(code_of([] { parse_template("no sections", "x"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { parse_template("[user]\na\n[system]\nb", "x"); }) == ErrorCode::parse_error);
  }

  TEST_CASE("role names round trip") {
    for (auto r : kAllRoles) CHECK(parse_role(to_string(r)) == r);
    CHECK_FALSE(parse_role("critic").has_value());
  }

  TEST_CASE("loop config validation") {
    CHECK_NOTHROW(validate(LoopConfig{}));
    for (auto bad : {small(0, 2), small(1, 0), small(1, 1, 0)})
      CHECK(code_of([&] { validate(bad); }) == ErrorCode::invalid_input);
    LoopConfig hot;
    hot.t0 = 2.5;
    CHECK(code_of([&] { validate(hot); }) == ErrorCode::invalid_input);
    hot.t0 = 0.0;
    CHECK(code_of([&] { validate(hot); }) == ErrorCode::invalid_input);
    CHECK(call_budget(LoopConfig{}) == 124);
  }
}

TEST_SUITE("sms.micro") {
  TEST_CASE("echo denoiser and a clean checker stop after one pass") {
    auto b = identity_backend();
    MicroTranscript t;
    const auto out = run_micro("What organ is shown?", *b, 1.0, LoopConfig{}, 5, PromptSet::builtin(), t);
    CHECK(out == "What organ is shown?");
    CHECK(b->calls(AgentRole::classifier_denoiser) == 1);
    CHECK(b->calls(AgentRole::residual_checker) == 1);
    CHECK(t.calls.size() == 2);
    CHECK(t.iterations == 1);
  }

  TEST_CASE("a checker that never says clean hits the cap") {
    auto b = identity_backend();
    b->on(AgentRole::residual_checker, [](const ChatRequest&) { return std::string("RESULT: NOISY"); });
    for (std::size_t cap : {1, 3, 5}) {
      MicroTranscript t;
      run_micro("q?", *b, 1.0, small(1, 1, cap), 1, PromptSet::builtin(), t);
      CHECK(t.iterations == cap);
      CHECK(t.calls.size() == 2 * cap);
    }
  }

  TEST_CASE("dictionary oracle repairs one typo per pass") {
    DictionaryOracleBackend b(question_dictionary());
    MicroTranscript t;
    const auto out = run_micro("Waht organ is shwon?", b, 1.0, LoopConfig{}, 3, PromptSet::builtin(), t);
    CHECK(out == "What organ is shown?");
    CHECK(t.iterations == 2);
    REQUIRE(t.calls.size() == 4);
    CHECK(extract_answer(t.calls[0].reply) == "What organ is shwon?");
  }

  TEST_CASE("a failed call is retried once") {
    auto b = identity_backend();
    std::atomic<int> failures{1};
    b->on(AgentRole::classifier_denoiser, [&](const ChatRequest& r) {
      if (failures-- > 0) fail(ErrorCode::backend_error, "transient");
      return answer_block(request_field(r, kOriginalQuestion));
    });
    MicroTranscript t;
    CHECK(run_micro("q?", *b, 1.0, LoopConfig{}, 1, PromptSet::builtin(), t) == "q?");
    REQUIRE(t.calls.size() == 3);
    CHECK(t.calls[0].error.value_or("").find("transient") != std::string::npos);
    CHECK(t.calls[1].user_content == t.calls[0].user_content);
    CHECK(t.calls[1].seed == t.calls[0].seed);
  }

  TEST_CASE("two failures in a row raise micro-loop-error with the partial transcript") {
    auto b = identity_backend();
    b->on(AgentRole::residual_checker,
          [](const ChatRequest&) -> std::string { throw std::runtime_error("checker down"); });
    MicroTranscript t;
    try {
      run_micro("q?", *b, 1.0, LoopConfig{}, 1, PromptSet::builtin(), t);
      FAIL("expected micro-loop-error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::micro_loop_error);
      CHECK(std::string(e.what()).find("checker down") != std::string::npos);
    }
    CHECK(t.calls.size() == 3);
    CHECK(t.candidate == "q?");
  }

  TEST_CASE("retries never push a run past its call budget") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      auto b = identity_backend();
      std::atomic<std::uint64_t> n{0};
      auto flaky = [&](std::string reply) {
        return [&, reply](const ChatRequest& r) {
          if (mix64(seed * 977 + n++) % 3 == 0) fail(ErrorCode::backend_error, "flaky");
          return reply.empty() ? answer_block(request_field(r, kOriginalQuestion)) : reply;
        };
      };
      b->on(AgentRole::classifier_denoiser, flaky("")).on(AgentRole::residual_checker, flaky("RESULT: NOISY"));
      MicroTranscript t;
      try {
        run_micro("q?", *b, 1.0, LoopConfig{}, seed, PromptSet::builtin(), t);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::micro_loop_error);
      }
      CHECK(t.calls.size() <= 2 * LoopConfig{}.max_micro_iters);
    }
  }

  TEST_CASE("a reply without an answer block keeps the sentence") {
    auto b = identity_backend();
    b->on(AgentRole::classifier_denoiser, [](const ChatRequest&) { return std::string("I cannot help."); });
    MicroTranscript t;
    CHECK(run_micro("Waht?", *b, 1.0, LoopConfig{}, 0, PromptSet::builtin(), t) == "Waht?");
  }

  TEST_CASE("empty input is rejected") {
    auto b = identity_backend();
    MicroTranscript t;
    CHECK(code_of([&] { run_micro("", *b, 1.0, LoopConfig{}, 0, PromptSet::builtin(), t); }) ==
          ErrorCode::invalid_input);
  }
}

TEST_SUITE("sms.parallel") {
  TEST_CASE("k = 1 matches a single micro run") {
    DictionaryOracleBackend b(question_dictionary());
    const auto prompts = PromptSet::builtin();
    const auto runs = run_parallel_micros("Waht organ is shwon?", b, 1.0, small(1, 1), 9, 0, prompts);
    MicroTranscript t;
    const auto single = run_micro("Waht organ is shwon?", b, 1.0, small(1, 1), micro_seed(9, 0, 0), prompts, t);
    REQUIRE(runs.size() == 1);
    CHECK(runs[0].candidate == single);
    CHECK(runs[0].calls.size() == t.calls.size());
    CHECK(runs[0].seed == micro_seed(9, 0, 0));
  }

  TEST_CASE("a deterministic mock gives identical candidates") {
    DictionaryOracleBackend b(question_dictionary());
    const auto runs = run_parallel_micros("Is the hreat enlarged?", b, 1.0, small(10, 1), 1, 0, PromptSet::builtin());
    for (const auto& r : runs) CHECK(r.candidate == "Is the heart enlarged?");
  }

  TEST_CASE("seeded stochastic candidates keep their order") {
    StochasticOracleBackend b(question_dictionary(), 0.7);
    const auto once = run_parallel_micros("Waht orgn is shwon in tihs iamge?", b, 1.0, small(10, 1), 4, 1,
                                          PromptSet::builtin());
    std::set<std::string> distinct;
    for (int rep = 0; rep < 5; ++rep) {
      const auto again = run_parallel_micros("Waht orgn is shwon in tihs iamge?", b, 1.0, small(10, 1), 4, 1,
                                             PromptSet::builtin());
      for (std::size_t i = 0; i < once.size(); ++i) {
        CHECK(again[i].candidate == once[i].candidate);
        CHECK(again[i].run == i);
        distinct.insert(again[i].candidate);
      }
    }
    CHECK(distinct.size() > 1);  // the runs really differ
  }

  TEST_CASE("a failing run carries the input and is flagged") {
    auto b = identity_backend();
    b->on(AgentRole::classifier_denoiser, [](const ChatRequest& r) -> std::string {
      if (r.seed == derive_key({micro_seed(2, 0, 1), 0})) throw std::runtime_error("down");
      return answer_block("fixed");
    });
    const auto runs = run_parallel_micros("nosiy", *b, 1.0, small(3, 1), 2, 0, PromptSet::builtin());
    CHECK_FALSE(runs[0].failed);
    CHECK(runs[0].candidate == "fixed");
    CHECK(runs[1].failed);
    CHECK(runs[1].candidate == "nosiy");
    CHECK(runs[1].error.find("down") != std::string::npos);
    CHECK_FALSE(runs[2].failed);
  }
}

TEST_SUITE("sms.macro") {
  std::unique_ptr<ScriptedBackend> numbered_backend() {
    auto b = identity_backend();
    // Micro run i returns "candidate <i+1>".
    b->on(AgentRole::classifier_denoiser, [](const ChatRequest& r) {
      for (std::size_t i = 0; i < 10; ++i)
        if (r.seed == derive_key({micro_seed(0, 0, i), 0})) return answer_block("candidate " + std::to_string(i + 1));
      return answer_block("unknown");
    });
    return b;
  }

  TEST_CASE("an always-invalid validator falls back to the input") {
    auto b = numbered_backend();
    b->on(AgentRole::output_validator, [](const ChatRequest&) { return std::string("VERDICT: INVALID"); });
    const auto r = run_macro_round("orig", std::nullopt, *b, 1.0, small(4, 1), 0, 0, PromptSet::builtin());
    CHECK_FALSE(r.valid);
    CHECK(r.carried == "orig");
    CHECK(r.selection == std::string("candidate 1"));
  }

  TEST_CASE("the selected candidate is carried when valid") {
    auto b = numbered_backend();
    b->on(AgentRole::optimal_selector, [](const ChatRequest& r) {
      CHECK(r.image_ref == std::string("img/p1.png"));
      return "Third one.\n" + answer_block(request_candidates(r).at(2));
    });
    const auto r = run_macro_round("orig", "img/p1.png", *b, 1.0, small(4, 1), 0, 0, PromptSet::builtin());
    CHECK(r.valid);
    CHECK(r.carried == "candidate 3");
    REQUIRE(r.validator.has_value());
    CHECK(r.validator->user_content.find("Possible_Prediction_Result: candidate 3") != std::string::npos);
    CHECK_FALSE(r.validator->image_ref.has_value());
  }

  TEST_CASE("selector decision table") {
    struct Row {
      std::string selector_reply;
      std::string validator_reply;
      bool valid;
      std::string carried;
      bool validator_called;
    };
    const std::vector<Row> rows = {
        {answer_block("candidate 2"), "VERDICT: VALID", true, "candidate 2", true},
        {answer_block("candidate 2"), "VERDICT: INVALID", false, "orig", true},
        {answer_block("something new"), "VERDICT: VALID", true, "something new", true},
        {answer_block("something new"), "VERDICT: INVALID", false, "orig", true},
        {answer_block("something new"), "looks good", false, "orig", true},
        {"I would pick the second.", "VERDICT: VALID", false, "orig", false},
        {answer_block(""), "VERDICT: VALID", false, "orig", false},
        {answer_block("candidate 2") + "\nRESULT: CLEAN", "VERDICT: VALID", false, "orig", false},
    };
    for (const auto& row : rows) {
      auto b = numbered_backend();
      b->on(AgentRole::optimal_selector, [&](const ChatRequest&) { return row.selector_reply; })
          .on(AgentRole::output_validator, [&](const ChatRequest&) { return row.validator_reply; });
      const auto r = run_macro_round("orig", std::nullopt, *b, 1.0, small(3, 1), 0, 0, PromptSet::builtin());
      CAPTURE(row.selector_reply);
      CHECK(r.valid == row.valid);
      CHECK(r.carried == row.carried);
      CHECK(r.validator.has_value() == row.validator_called);
    }
  }

  TEST_CASE("selector or validator failures take the fallback path") {
    auto b = numbered_backend();
    b->on(AgentRole::optimal_selector, [](const ChatRequest&) -> std::string { throw std::runtime_error("x"); });
    auto r = run_macro_round("orig", std::nullopt, *b, 1.0, small(2, 1), 0, 0, PromptSet::builtin());
    CHECK_FALSE(r.valid);
    CHECK(r.carried == "orig");
    CHECK(r.selector->error.has_value());
    b = numbered_backend();
    b->on(AgentRole::output_validator, [](const ChatRequest&) -> std::string { throw std::runtime_error("y"); });
    r = run_macro_round("orig", std::nullopt, *b, 1.0, small(2, 1), 0, 0, PromptSet::builtin());
    CHECK_FALSE(r.valid);
    CHECK(r.carried == "orig");
  }
}

TEST_SUITE("sms.denoise") {
  TEST_CASE("identity agents") {
    auto b = identity_backend();
    const auto r = denoise("What organ is shown?", std::nullopt, *b, small(3, 2), 0);
    CHECK(r.final_text == "What organ is shown?");
    REQUIRE(r.trace.rounds.size() == 2);
    CHECK(r.trace.rounds[0].temperature == 1.0);
    CHECK(r.trace.rounds[1].temperature == 0.5);
    CHECK(r.trace.call_count() == b->calls());
  }

  TEST_CASE("temperature halves only after valid rounds") {
    auto b = identity_backend();
    std::atomic<int> verdicts{0};
    // Validator pattern over rounds: valid, invalid, valid, invalid.
    b->on(AgentRole::output_validator,
          [&](const ChatRequest&) { return verdicts++ % 2 == 0 ? "VERDICT: VALID" : "VERDICT: INVALID"; });
    auto cfg = small(2, 4);
    cfg.t0 = 1.6;
    const auto r = denoise("q?", std::nullopt, *b, cfg, 0);
    std::vector<double> temps;
    for (const auto& round : r.trace.rounds) temps.push_back(round.temperature);
    CHECK(temps == std::vector<double>{1.6, 0.8, 0.8, 0.4});
    for (const auto& round : r.trace.rounds)
      for (const auto& m : round.micros)
        for (const auto& c : m.calls) CHECK(c.temperature == round.temperature);

    cfg.halving = false;
    verdicts = 0;
    const auto flat = denoise("q?", std::nullopt, *b, cfg, 0);
    for (const auto& round : flat.trace.rounds) CHECK(round.temperature == 1.6);
  }

  TEST_CASE("oracle recovers a swap-corrupted question") {
    DictionaryOracleBackend b(question_dictionary());
    const std::string clean = "Where is the mass located relative to the bladder?";
    const auto noisy = textnoise::corrupt_text(clean, {textnoise::TextKind::swap, 0.25, 11}).text;
    REQUIRE(noisy != clean);
    const auto r = denoise(noisy, std::nullopt, b, LoopConfig{}, 3);
    CHECK(r.final_text == clean);
  }

  TEST_CASE("call count stays within the bound for hostile backends") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      auto b = identity_backend();
      std::atomic<std::uint64_t> n{0};
      const auto roll = [&, seed]() { return mix64(derive_key({seed, n++})) % 4; };
      b->on(AgentRole::classifier_denoiser,
             [&](const ChatRequest& r) {
               if (roll() == 0) fail(ErrorCode::backend_error, "x");
               return answer_block(request_field(r, kOriginalQuestion) + "!");
             })
          .on(AgentRole::residual_checker,
              [&](const ChatRequest&) {
                if (roll() == 0) fail(ErrorCode::backend_error, "x");
                return std::string(roll() == 1 ? "RESULT: CLEAN" : "garbage");
              })
          .on(AgentRole::output_validator, [&](const ChatRequest&) {
            return std::string(roll() < 2 ? "VERDICT: VALID" : "VERDICT: INVALID");
          });
      const auto cfg = LoopConfig{};
      const auto r = denoise("q?", std::nullopt, *b, cfg, seed);
      CHECK(b->calls() <= call_budget(cfg));
      CHECK(r.trace.call_count() == b->calls());
    }
  }

  TEST_CASE("every verdict invalid returns the input exactly") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      StochasticOracleBackend oracle(question_dictionary(), 0.5);
      ScriptedBackend b;
      for (auto role : {AgentRole::classifier_denoiser, AgentRole::residual_checker, AgentRole::optimal_selector})
        b.on(role, [&](const ChatRequest& r) { return oracle.call(r); });
      b.on(AgentRole::output_validator, [](const ChatRequest&) { return std::string("VERDICT: INVALID"); });
      const std::string input = "Waht  orgn is shwon, (really)?";
      const auto r = denoise(input, std::nullopt, b, small(4, 3), seed);
      CHECK(r.final_text == input);
      for (const auto& round : r.trace.rounds) CHECK(round.carried == input);
    }
  }

  TEST_CASE("dictionary oracle recovery on the question set") {
    const auto questions = testsupport::load_questions(kQuestions);
    REQUIRE(questions.size() == 100);
    DictionaryOracleBackend b(question_dictionary());
    for (auto kind : textnoise::kCharacterKinds) {
      const auto s = testsupport::recovery(questions, b, LoopConfig{}, kind, 0.25, 42);
      MESSAGE(textnoise::to_string(kind) << ": " << s.exact << "/" << s.total);
      CHECK(s.rate() >= 0.9);
      CHECK(s.max_calls <= 124);
    }
  }

  TEST_CASE("more macro rounds never hurt the stochastic oracle") {
    const auto questions = testsupport::load_questions(kQuestions);
    StochasticOracleBackend b(question_dictionary(), 0.8);
    double previous = -1.0;
    for (std::size_t n : {1, 2, 3}) {
      const auto s = testsupport::recovery(questions, b, small(2, n), textnoise::TextKind::swap, 0.25, 8);
      MESSAGE("n=" << n << ": " << s.exact);
      CHECK(s.rate() >= previous);
      previous = s.rate();
    }
  }
}

TEST_SUITE("sms.trace") {
  TEST_CASE("trace round trip and replay") {
    StochasticOracleBackend b(question_dictionary(), 0.6);
    const auto r = denoise("Waht orgn is shwon in tihs iamge?", "img/a.png", b, small(4, 2), 77);
    const auto text = dump_trace(r.trace);
    const auto back = parse_trace(text);
    CHECK(dump_trace(back) == text);
    CHECK(back.call_count() == r.trace.call_count());
    const auto again = replay(back);
    CHECK(again.final_text == r.final_text);
    CHECK(dump_trace(again.trace) == text);
  }

  TEST_CASE("replay reproduces recorded failures") {
    auto b = identity_backend();
    std::atomic<int> n{0};
    b->on(AgentRole::residual_checker, [&](const ChatRequest&) {
      if (n++ % 3 == 0) fail(ErrorCode::backend_error, "flaky");
      return std::string("RESULT: NOISY");
    });
    const auto r = denoise("q?", std::nullopt, *b, small(3, 2), 5);
    const auto again = replay(parse_trace(dump_trace(r.trace)));
    CHECK(dump_trace(again.trace) == dump_trace(r.trace));
  }

  TEST_CASE("replay refuses unknown requests") {
    auto b = identity_backend();
    const auto r = denoise("q?", std::nullopt, *b, small(1, 1), 5);
    ReplayBackend replayer(r.trace);
    ChatRequest other;
    other.user_content = "something else";
    CHECK(code_of([&] { replayer.call(other); }) == ErrorCode::backend_error);
  }

  TEST_CASE("malformed traces") {
    CHECK(code_of([] { parse_trace("{}"); }) == ErrorCode::parse_error);
    CHECK(code_of([] { parse_trace("[1,2"); }) == ErrorCode::parse_error);
    auto b = identity_backend();
    auto text = dump_trace(denoise("q?", std::nullopt, *b, small(1, 1), 5).trace);
    text.replace(text.find("\"version\": 1"), 12, "\"version\": 9");
    CHECK(code_of([&] { parse_trace(text); }) == ErrorCode::parse_error);
  }
}

TEST_SUITE("sms.dictionary") {
  TEST_CASE("optimal string alignment distance") {
    CHECK(osa_distance("", "") == 0);
    CHECK(osa_distance("abc", "") == 3);
    CHECK(osa_distance("organ", "oragn") == 1);
    CHECK(osa_distance("shown", "shwon") == 1);
    CHECK(osa_distance("kitten", "sitting") == 3);
    CHECK(osa_distance("ca", "abc") == 3);  // OSA, not unrestricted Damerau
  }

  TEST_CASE("suggestions use context then frequency") {
    const auto d = Dictionary::from_text("in this image\nthe cat\nthe dog\nthe end\n");
    CHECK(d.suggestions("ths").front() == "the");
    CHECK(d.suggestions("ths", "in", "image").front() == "this");
    CHECK(d.suggestions("zzzzzz").empty());
    CHECK(d.contains("THIS"));
    CHECK(d.count("the") == 3);
    CHECK(d.bigram("in", "this") == 1);
  }

  TEST_CASE("builtin vocabulary covers the question set") {
    const auto d = Dictionary::builtin();
    for (const auto& q : testsupport::load_questions(kQuestions)) CHECK(unknown_words(d, q) == 0);
  }

  TEST_CASE("oracle keeps case and strips known distractors") {
    const auto pool = textnoise::DistractorPool::builtin();
    DictionaryOracleBackend b(question_dictionary(), pool.sentences());
    const std::string clean = "What organ is shown in this image?";
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto noisy = textnoise::corrupt_text(clean, {textnoise::TextKind::unrelated_sentence, 0.25, seed}).text;
      CHECK(denoise(noisy, std::nullopt, b, small(2, 2), seed).final_text == clean);
    }
    CHECK(denoise("WAHT organ is shown in this image?", std::nullopt, b, small(1, 1), 0).final_text ==
          "WHAT organ is shown in this image?");
  }
}

TEST_SUITE("sms.http") {
  // Chat-completions stub on an ephemeral local port. Records request
  // bodies and answers with the user content echoed in an answer block.
  struct Stub {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::mutex mutex;
    std::vector<nlohmann::json> bodies;
    std::vector<std::string> auth;
    std::atomic<int> status{200};

    Stub() {
      server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        {
          std::lock_guard lock(mutex);
          bodies.push_back(body);
          auth.push_back(req.get_header_value("Authorization"));
        }
        res.status = status.load();
        const auto& user = body["messages"][1]["content"];
        const std::string text = user.is_string() ? user.get<std::string>() : user[0]["text"].get<std::string>();
        nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "echo:" + text}}}}}}};
        res.set_content(reply.dump(), "application/json");
      });
      port = server.bind_to_any_port("127.0.0.1");
      thread = std::thread([this] { server.listen_after_bind(); });
      server.wait_until_ready();
    }
    ~Stub() {
      server.stop();
      thread.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"; }
  };

  TEST_CASE("request body and reply parsing") {
    HttpBackend b({"http://example.invalid/v1/chat/completions", "", "some-model", 5});
    ChatRequest req;
    req.system_prompt = "sys";
    req.user_content = "user";
    req.temperature = 0.3;
    req.seed = 12;
    const auto body = nlohmann::json::parse(b.request_body(req));
    CHECK(body["model"] == "some-model");
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][0]["content"] == "sys");
    CHECK(body["messages"][1]["content"] == "user");
    CHECK(body["temperature"].get<double>() == 0.3);
    CHECK(body["seed"].get<std::uint64_t>() == 12);

    CHECK(HttpBackend::parse_reply(R"({"choices":[{"message":{"content":"hi"}}]})") == "hi");
    CHECK(HttpBackend::parse_reply(
              R"({"choices":[{"message":{"content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]}}]})") ==
          "ab");
    CHECK(code_of([] { HttpBackend::parse_reply("{}"); }) == ErrorCode::backend_error);
    CHECK(code_of([] { HttpBackend({"ftp://x/y", "", "", 5}); }) == ErrorCode::invalid_input);
  }

  TEST_CASE("image references") {
    const auto dir = std::filesystem::temp_directory_path() / "imc_http_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "tiny.png").string();
    std::ofstream(path, std::ios::binary) << "PNGDATA";
    HttpBackend b({"http://example.invalid/x", "", "", 5});
    ChatRequest req;
    req.image_ref = path;
    auto body = nlohmann::json::parse(b.request_body(req));
    CHECK(body["messages"][1]["content"][1]["image_url"]["url"] == "data:image/png;base64,UE5HREFUQQ==");
    req.image_ref = "https://host/img.png";
    body = nlohmann::json::parse(b.request_body(req));
    CHECK(body["messages"][1]["content"][1]["image_url"]["url"] == "https://host/img.png");
    req.image_ref = (dir / "missing.png").string();
    CHECK(code_of([&] { b.request_body(req); }) == ErrorCode::io_error);
  }

  TEST_CASE("round trip against a local stub") {
    Stub stub;
    HttpBackend b({stub.url(), "secret", "m", 10});
    ChatRequest req;
    req.system_prompt = "sys";
    req.user_content = "ping";
    req.temperature = 0.123456789;
    CHECK(b.call(req) == "echo:ping");
    REQUIRE(stub.bodies.size() == 1);
    CHECK(stub.bodies[0]["temperature"].get<double>() == 0.123456789);
    CHECK(stub.auth[0] == "Bearer secret");

    stub.status = 500;
    CHECK(code_of([&] { b.call(req); }) == ErrorCode::backend_error);
  }

  TEST_CASE("unreachable endpoint") {
    int port = 0;
    {
      httplib::Server probe;
      port = probe.bind_to_any_port("127.0.0.1");
    }
    HttpBackend b({"http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions", "", "", 2});
    CHECK(code_of([&] { b.call(ChatRequest{}); }) == ErrorCode::backend_error);
  }

  TEST_CASE("ten parallel micro loops against the stub") {
    Stub stub;
    HttpBackend b({stub.url(), "", "", 10});
    const auto runs = run_parallel_micros("Waht organ?", b, 1.0, small(10, 1, 1), 3, 0, PromptSet::builtin());
    REQUIRE(runs.size() == 10);
    for (const auto& r : runs) {
      CHECK_FALSE(r.failed);
      REQUIRE(r.calls.size() == 2);
      // The stub echoes, so each reply must be this run's own request.
      for (const auto& c : r.calls) CHECK(c.reply == "echo:" + c.user_content);
    }
    CHECK(stub.bodies.size() == 20);
  }

  TEST_CASE("environment configuration") {
    ::unsetenv("IMC_LLM_ENDPOINT");
    CHECK(code_of([] { http_config_from_env(); }) == ErrorCode::invalid_input);
    ::setenv("IMC_LLM_ENDPOINT", "http://localhost:1/v1/chat/completions", 1);
    ::setenv("IMC_LLM_MODEL", "mm", 1);
    const auto c = http_config_from_env();
    CHECK(c.endpoint == "http://localhost:1/v1/chat/completions");
    CHECK(c.model == "mm");
    ::unsetenv("IMC_LLM_ENDPOINT");
    ::unsetenv("IMC_LLM_MODEL");
  }
}
