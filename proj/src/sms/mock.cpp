#include "imc/sms/mock.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "imc/common/error.hpp"
#include "imc/common/resources.hpp"
#include "imc/common/rng.hpp"

namespace imc::sms {

namespace {

bool is_letter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct Run {
  std::size_t begin, length;
};

std::vector<Run> letter_runs(const std::string& text) {
  std::vector<Run> runs;
  for (std::size_t i = 0; i < text.size();) {
    if (!is_letter(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_letter(text[j])) ++j;
    runs.push_back({i, j - i});
    i = j;
  }
  return runs;
}

std::size_t word_count(const std::string& text) {
  std::istringstream in(text);
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

// Carries the case pattern of `like` over to `word`.
std::string match_case(const std::string& word, std::string_view like) {
  std::string out = word;
  const bool all_upper = like.size() > 1 && std::all_of(like.begin(), like.end(), [](char c) {
                           return std::isupper(static_cast<unsigned char>(c));
                         });
  if (all_upper) {
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  } else if (!out.empty() && std::isupper(static_cast<unsigned char>(like.front()))) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

std::string request_field(const ChatRequest& request, std::string_view name) {
  const std::string needle = std::string(name) + ":";
  std::istringstream in(request.user_content);
  for (std::string line; std::getline(in, line);)
    if (line.rfind(needle, 0) == 0) return trim(line.substr(needle.size()));
  return {};
}

std::vector<std::string> request_candidates(const ChatRequest& request) {
  std::vector<std::string> out;
  std::istringstream in(request.user_content);
  bool listing = false;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(std::string(kPredictionResults) + ":", 0) == 0) {
      listing = true;
      continue;
    }
    if (!listing || line.empty() || line[0] != '[') continue;
    const auto close = line.find("] ");
    if (close != std::string::npos) out.push_back(line.substr(close + 2));
  }
  return out;
}

// ---- scripted -------------------------------------------------------------

ScriptedBackend& ScriptedBackend::on(AgentRole role, Handler handler) {
  handlers_[role] = std::move(handler);
  return *this;
}

std::string ScriptedBackend::call(const ChatRequest& request) {
  ++calls_;
  ++per_role_[static_cast<std::size_t>(request.role)];
  const auto it = handlers_.find(request.role);
  if (it == handlers_.end())
    fail(ErrorCode::backend_error, "scripted backend has no handler for " + std::string(to_string(request.role)));
  return it->second(request);
}

std::size_t ScriptedBackend::calls(AgentRole role) const { return per_role_[static_cast<std::size_t>(role)].load(); }

std::unique_ptr<ScriptedBackend> identity_backend() {
  auto b = std::make_unique<ScriptedBackend>();
  b->on(AgentRole::classifier_denoiser,
       [](const ChatRequest& r) { return answer_block(request_field(r, kOriginalQuestion)); })
      .on(AgentRole::residual_checker, [](const ChatRequest&) { return std::string("RESULT: CLEAN"); })
      .on(AgentRole::optimal_selector,
          [](const ChatRequest& r) {
            const auto c = request_candidates(r);
            return answer_block(c.empty() ? std::string() : c.front());
          })
      .on(AgentRole::output_validator, [](const ChatRequest&) { return std::string("VERDICT: VALID"); });
  return b;
}

// ---- dictionary -----------------------------------------------------------

Dictionary Dictionary::from_text(const std::string& text) {
  Dictionary d;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] == '#') continue;
    std::string prev;
    for (const auto& r : letter_runs(line)) {
      auto w = lower(std::string_view(line).substr(r.begin, r.length));
      ++d.counts_[w];
      if (!prev.empty()) ++d.bigrams_[{prev, w}];
      prev = std::move(w);
    }
  }
  return d;
}

Dictionary Dictionary::builtin() { return from_text(std::string(resources::get("vocabulary"))); }

Dictionary Dictionary::load(const std::string& path) { return from_text(resources::read_file(path)); }

bool Dictionary::contains(std::string_view word) const { return counts_.count(lower(word)) > 0; }

std::size_t Dictionary::count(std::string_view word) const {
  const auto it = counts_.find(lower(word));
  return it == counts_.end() ? 0 : it->second;
}

std::size_t Dictionary::bigram(std::string_view first, std::string_view second) const {
  const auto it = bigrams_.find({lower(first), lower(second)});
  return it == bigrams_.end() ? 0 : it->second;
}

std::vector<std::string> Dictionary::suggestions(std::string_view word, std::string_view previous,
                                                 std::string_view next, std::size_t max_distance) const {
  const auto w = lower(word);
  std::size_t best = max_distance + 1;
  struct Hit {
    std::size_t context, count;
    std::string word;
  };
  std::vector<Hit> hits;
  for (const auto& [entry, count] : counts_) {
    // Length difference bounds the distance from below.
    const auto gap = entry.size() > w.size() ? entry.size() - w.size() : w.size() - entry.size();
    if (gap > best) continue;
    const auto d = osa_distance(w, entry);
    if (d < best) {
      best = d;
      hits.clear();
    }
    if (d == best) {
      const std::size_t context = (previous.empty() ? 0 : bigram(previous, entry)) + (next.empty() ? 0 : bigram(entry, next));
      hits.push_back({context, count, entry});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.context != b.context) return a.context > b.context;
    if (a.count != b.count) return a.count > b.count;
    return a.word < b.word;
  });
  std::vector<std::string> out;
  for (auto& h : hits) out.push_back(std::move(h.word));
  return out;
}

std::size_t osa_distance(std::string_view a, std::string_view b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1])
        d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
    }
  return d[n][m];
}

std::size_t unknown_words(const Dictionary& dict, const std::string& text) {
  std::size_t n = 0;
  for (const auto& r : letter_runs(text))
    if (r.length > 1 && !dict.contains(std::string_view(text).substr(r.begin, r.length))) ++n;
  return n;
}

// ---- dictionary oracle ----------------------------------------------------

DictionaryOracleBackend::DictionaryOracleBackend(Dictionary dict, std::vector<std::string> distractors)
    : dict_(std::move(dict)), distractors_(std::move(distractors)) {}

bool DictionaryOracleBackend::has_distractor(const std::string& sentence) const {
  return std::any_of(distractors_.begin(), distractors_.end(),
                     [&](const std::string& d) { return !d.empty() && sentence.find(d) != std::string::npos; });
}

std::string DictionaryOracleBackend::strip_distractor(const std::string& sentence) const {
  for (const auto& d : distractors_) {
    const auto at = d.empty() ? std::string::npos : sentence.find(d);
    if (at == std::string::npos) continue;
    std::string left = trim(sentence.substr(0, at)), right = trim(sentence.substr(at + d.size()));
    // Drop the ". " joiner left behind when the distractor came first.
    if (left.empty() && right.rfind(". ", 0) == 0) right = trim(right.substr(1));
    if (left.empty()) return right;
    if (right.empty()) return left;
    return left + " " + right;
  }
  return sentence;
}

std::string DictionaryOracleBackend::repair_once(const std::string& sentence) const {
  if (has_distractor(sentence)) return strip_distractor(sentence);
  const auto runs = letter_runs(sentence);
  const auto text = std::string_view(sentence);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto word = text.substr(runs[i].begin, runs[i].length);
    if (word.size() < 2 || dict_.contains(word)) continue;
    const auto prev = i > 0 ? text.substr(runs[i - 1].begin, runs[i - 1].length) : std::string_view{};
    const auto next = i + 1 < runs.size() ? text.substr(runs[i + 1].begin, runs[i + 1].length) : std::string_view{};
    const auto fixes = dict_.suggestions(word, prev, next);
    if (fixes.empty()) continue;
    std::string out = sentence;
    out.replace(runs[i].begin, runs[i].length, match_case(fixes.front(), word));
    return out;
  }
  return sentence;
}

std::string DictionaryOracleBackend::call(const ChatRequest& request) {
  ++calls_;
  switch (request.role) {
    case AgentRole::classifier_denoiser: {
      const auto q = request_field(request, kOriginalQuestion);
      return "Noise check done.\n" + answer_block(repair_once(q));
    }
    case AgentRole::residual_checker: {
      const auto s = request_field(request, kPredictionResult);
      const bool clean = unknown_words(dict_, s) == 0 && !has_distractor(s);
      return clean ? "RESULT: CLEAN" : "RESULT: NOISY";
    }
    case AgentRole::optimal_selector: {
      const auto candidates = request_candidates(request);
      if (candidates.empty()) return "no candidates";
      std::size_t best = 0, best_score = static_cast<std::size_t>(-1);
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto score = unknown_words(dict_, candidates[i]) + (has_distractor(candidates[i]) ? 1 : 0);
        if (score < best_score) {
          best_score = score;
          best = i;
        }
      }
      return answer_block(candidates[best]);
    }
    case AgentRole::output_validator: {
      const auto original = request_field(request, kOriginalQuestion);
      const auto selected = request_field(request, kPredictionResult);
      const bool ok = !selected.empty() && unknown_words(dict_, selected) <= unknown_words(dict_, original) &&
                      word_count(selected) <= word_count(original);
      return ok ? "VERDICT: VALID" : "VERDICT: INVALID";
    }
  }
  fail(ErrorCode::backend_error, "unknown agent role");
}

StochasticOracleBackend::StochasticOracleBackend(Dictionary dict, double miss_rate, std::vector<std::string> distractors)
    : DictionaryOracleBackend(std::move(dict), std::move(distractors)), miss_rate_(miss_rate) {
  require(miss_rate >= 0.0, "miss rate must be non-negative");
}

std::string StochasticOracleBackend::call(const ChatRequest& request) {
  if (request.role == AgentRole::classifier_denoiser) {
    CounterRng rng(derive_key({request.seed, hash_string("stochastic.miss")}));
    if (rng.uniform() < std::min(1.0, miss_rate_ * request.temperature)) {
      DictionaryOracleBackend::call(request);  // keep the call counter honest
      return "Noise check done.\n" + answer_block(request_field(request, kOriginalQuestion));
    }
  }
  return DictionaryOracleBackend::call(request);
}

}  // namespace imc::sms
