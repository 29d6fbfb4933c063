#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "imc/sms/sms.hpp"

namespace imc::sms {

// The sentence a request is about: the Original_Question line for the
// denoiser, the Possible_Prediction_Result line for checker and validator.
// Templates put each placeholder on its own "Name: value" line.
std::string request_field(const ChatRequest& request, std::string_view name);
// Candidates listed under Possible_Prediction_Results as "[i] text" lines.
std::vector<std::string> request_candidates(const ChatRequest& request);

// Per-role reply functions. Roles without a handler throw backend-error.
class ScriptedBackend : public ChatBackend {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;

  ScriptedBackend& on(AgentRole role, Handler handler);
  std::string call(const ChatRequest& request) override;
  std::size_t calls() const { return calls_.load(); }
  std::size_t calls(AgentRole role) const;

 private:
  std::map<AgentRole, Handler> handlers_;
  std::atomic<std::size_t> calls_{0};
  std::array<std::atomic<std::size_t>, 4> per_role_{};
};

// Echo denoiser, CLEAN checker, first-candidate selector, VALID validator.
std::unique_ptr<ScriptedBackend> identity_backend();

// Lower-case word list with corpus unigram and bigram counts; words are
// runs of ASCII letters, bigrams are neighbouring runs on one line.
class Dictionary {
 public:
  static Dictionary from_text(const std::string& text);
  static Dictionary builtin();
  static Dictionary load(const std::string& path);

  bool contains(std::string_view word) const;  // case-insensitive
  std::size_t size() const { return counts_.size(); }
  std::size_t count(std::string_view word) const;
  std::size_t bigram(std::string_view first, std::string_view second) const;
  // Entries at the smallest optimal-string-alignment distance (at most
  // max_distance), ranked by bigram support from the neighbouring words,
  // then frequency, then alphabetically. Empty if nothing is close enough.
  std::vector<std::string> suggestions(std::string_view word, std::string_view previous = {},
                                       std::string_view next = {}, std::size_t max_distance = 2) const;

 private:
  std::map<std::string, std::size_t> counts_;
  std::map<std::pair<std::string, std::string>, std::size_t> bigrams_;
};

// Optimal string alignment distance (adjacent transpositions cost 1).
std::size_t osa_distance(std::string_view a, std::string_view b);

// Number of letter runs in `text` that the dictionary does not know.
std::size_t unknown_words(const Dictionary& dict, const std::string& text);

// Deterministic oracle agents over a dictionary:
//  - denoiser repairs the first unknown word to its best suggestion (case
//    of the first letter kept) and drops known distractor sentences;
//  - checker says CLEAN when nothing is unknown and no distractor is left;
//  - selector picks the candidate with the fewest unknown words (first on
//    ties);
//  - validator says VALID when the selection has no more unknown words than
//    the round input and the same number of words or fewer.
class DictionaryOracleBackend : public ChatBackend {
 public:
  explicit DictionaryOracleBackend(Dictionary dict, std::vector<std::string> distractors = {});
  std::string call(const ChatRequest& request) override;
  std::size_t calls() const { return calls_.load(); }

 protected:
  std::string repair_once(const std::string& sentence) const;
  const Dictionary& dictionary() const { return dict_; }

 private:
  bool has_distractor(const std::string& sentence) const;
  std::string strip_distractor(const std::string& sentence) const;

  Dictionary dict_;
  std::vector<std::string> distractors_;
  std::atomic<std::size_t> calls_{0};
};

// The dictionary oracle with a temperature-dependent denoiser: each pass
// leaves the sentence unrepaired with probability min(1, miss_rate * t),
// drawn from the request seed. Checker, selector and validator stay exact.
class StochasticOracleBackend : public DictionaryOracleBackend {
 public:
  StochasticOracleBackend(Dictionary dict, double miss_rate, std::vector<std::string> distractors = {});
  std::string call(const ChatRequest& request) override;

 private:
  double miss_rate_;
};

}  // namespace imc::sms
