#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "imc/common/error.hpp"
#include "imc/common/rng.hpp"
#include "imc/textnoise/textnoise.hpp"

namespace imc::textnoise {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

// Stream tags. Selection and placement are shared by corrupt_text and
// mixed_character_noise so the two agree word for word.
std::uint64_t select_key(std::uint64_t seed) { return derive_key({seed, hash_string("text.select")}); }
std::uint64_t edit_key(std::uint64_t seed, std::size_t word) {
  return derive_key({seed, hash_string("text.edit"), word});
}
std::uint64_t kind_key(std::uint64_t seed, std::size_t word) {
  return derive_key({seed, hash_string("text.kind"), word});
}

char match_case(char letter, char like) {
  return std::isupper(static_cast<unsigned char>(like)) ? static_cast<char>(std::toupper(letter)) : letter;
}

std::vector<std::size_t> swap_positions(std::string_view core) {
  std::vector<std::size_t> interior, any;
  for (std::size_t i = 0; i + 1 < core.size(); ++i) {
    if (core[i] == core[i + 1]) continue;
    any.push_back(i);
    if (i >= 1 && i + 2 < core.size()) interior.push_back(i);
  }
  // Short words have no interior pair; fall back to one touching an end.
  return interior.empty() ? any : interior;
}

WordEdit draw_edit(std::string_view core, TextKind kind, CounterRng& rng, const KeyboardMap& keys) {
  WordEdit edit{kind, 0, 0};
  const std::size_t n = core.size();
  switch (kind) {
    case TextKind::remove:
      edit.position = 1 + rng.below(n - 2);
      break;
    case TextKind::replace: {
      edit.position = 1 + rng.below(n - 2);
      const auto options = keys.neighbors(core[edit.position]);
      edit.letter = match_case(options[rng.below(options.size())], core[edit.position]);
      break;
    }
    case TextKind::insert:
      edit.position = 1 + rng.below(n - 1);
      edit.letter = static_cast<char>('a' + rng.below(26));
      break;
    case TextKind::swap: {
      const auto options = swap_positions(core);
      edit.position = options[rng.below(options.size())];
      break;
    }
    case TextKind::unrelated_sentence:
      fail(ErrorCode::invalid_input, "unrelated_sentence is not a word edit");
  }
  return edit;
}

// Picks `count` distinct entries of candidates (partial Fisher-Yates), sorted.
std::vector<std::size_t> choose(std::vector<std::size_t> candidates, std::size_t count, std::uint64_t seed) {
  CounterRng rng(select_key(seed));
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + rng.below(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(count);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

TextCorruptionResult apply_all(std::string_view q, const std::vector<Word>& words, std::vector<EditRecord> edits) {
  TextCorruptionResult result;
  result.text.reserve(q.size() + edits.size());
  std::size_t cursor = 0;
  for (const auto& rec : edits) {
    const auto& w = words[rec.word_index];
    result.text.append(q.substr(cursor, w.core_begin - cursor));
    result.text.append(apply_edit(q.substr(w.core_begin, w.core_length), rec.edit));
    cursor = w.core_begin + w.core_length;
  }
  result.text.append(q.substr(cursor));
  result.edits = std::move(edits);
  return result;
}

std::string join_sentences(std::string_view left, std::string_view right) {
  std::string out(left);
  const bool terminated = !left.empty() && (left.back() == '.' || left.back() == '?' || left.back() == '!');
  out += terminated ? " " : ". ";
  out += right;
  return out;
}

void check_rate(double rate) {
  require(std::isfinite(rate) && rate > 0.0 && rate <= 1.0, "corruption rate must be in (0, 1], got " + std::to_string(rate));
}

}  // namespace

std::string_view to_string(TextKind kind) {
  switch (kind) {
    case TextKind::insert: return "insert";
    case TextKind::remove: return "delete";
    case TextKind::swap: return "swap";
    case TextKind::replace: return "replace";
    case TextKind::unrelated_sentence: return "unrelated_sentence";
  }
  return "?";
}

TextKind parse_text_kind(std::string_view name) {
  for (auto kind : kAllTextKinds)
    if (to_string(kind) == name) return kind;
  fail(ErrorCode::invalid_input, "unknown text corruption kind '" + std::string(name) + "'");
}

std::vector<Word> find_words(std::string_view text) {
  std::vector<Word> words;
  std::size_t i = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    Word w;
    w.token_begin = i;
    std::size_t end = i;
    while (end < text.size() && !is_space(text[end])) ++end;
    std::size_t core_begin = i, core_end = end;
    while (core_begin < core_end && std::ispunct(static_cast<unsigned char>(text[core_begin]))) ++core_begin;
    while (core_end > core_begin && std::ispunct(static_cast<unsigned char>(text[core_end - 1]))) --core_end;
    w.core_begin = core_begin;
    w.core_length = core_end - core_begin;
    w.eligible = w.core_length >= 3 && std::all_of(text.begin() + static_cast<long>(core_begin),
                                                   text.begin() + static_cast<long>(core_end), is_alpha);
    words.push_back(w);
    i = end;
  }
  return words;
}

bool can_edit(std::string_view core, TextKind kind) {
  if (core.size() < 3 || !std::all_of(core.begin(), core.end(), is_alpha)) return false;
  if (kind == TextKind::swap) return !swap_positions(core).empty();
  return kind != TextKind::unrelated_sentence;
}

std::string apply_edit(std::string_view word, const WordEdit& edit) {
  std::string out(word);
  switch (edit.kind) {
    case TextKind::remove:
      require(edit.position < out.size(), "delete position outside the word");
      out.erase(edit.position, 1);
      break;
    case TextKind::replace:
      require(edit.position < out.size(), "replace position outside the word");
      out[edit.position] = edit.letter;
      break;
    case TextKind::insert:
      require(edit.position <= out.size(), "insert position outside the word");
      out.insert(out.begin() + static_cast<long>(edit.position), edit.letter);
      break;
    case TextKind::swap:
      require(edit.position + 1 < out.size(), "swap position outside the word");
      std::swap(out[edit.position], out[edit.position + 1]);
      break;
    case TextKind::unrelated_sentence:
      fail(ErrorCode::invalid_input, "unrelated_sentence is not a word edit");
  }
  return out;
}

std::string force_edit(std::string_view text, std::size_t word_index, const WordEdit& edit) {
  const auto words = find_words(text);
  require(word_index < words.size(), "word index " + std::to_string(word_index) + " out of range");
  return apply_all(text, words, {EditRecord{word_index, edit}}).text;
}

std::size_t edit_budget(std::size_t eligible, double rate) {
  check_rate(rate);
  // The epsilon absorbs products like 0.1 * 30 landing just above an integer.
  const auto budget = static_cast<std::size_t>(std::ceil(rate * static_cast<double>(eligible) - 1e-9));
  return std::min(eligible, budget);
}

TextCorruptionResult corrupt_text(std::string_view q, const TextCorruptionSpec& spec, const DistractorPool& pool,
                                  const KeyboardMap& keys) {
  if (spec.kind == TextKind::unrelated_sentence) {
    CounterRng rng(derive_key({spec.seed, hash_string("text.distractor")}));
    const auto& sentence = pool.pick(rng.next_u64());
    TextCorruptionResult result;
    result.text = rng.uniform() < 0.5 ? join_sentences(sentence, q) : join_sentences(q, sentence);
    return result;
  }

  check_rate(spec.rate);
  const auto words = find_words(q);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].eligible && can_edit(q.substr(words[i].core_begin, words[i].core_length), spec.kind))
      candidates.push_back(i);
  }
  if (candidates.empty()) return {std::string(q), true, {}};

  const auto budget = edit_budget(candidates.size(), spec.rate);
  std::vector<EditRecord> edits;
  for (auto index : choose(candidates, budget, spec.seed)) {
    CounterRng rng(edit_key(spec.seed, index));
    const auto core = q.substr(words[index].core_begin, words[index].core_length);
    edits.push_back({index, draw_edit(core, spec.kind, rng, keys)});
  }
  return apply_all(q, words, std::move(edits));
}

TextCorruptionResult mixed_character_noise(std::string_view q, double rate, std::uint64_t seed,
                                           const KeyboardMap& keys) {
  check_rate(rate);
  const auto words = find_words(q);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < words.size(); ++i)
    if (words[i].eligible) candidates.push_back(i);
  if (candidates.empty()) return {std::string(q), true, {}};

  std::vector<EditRecord> edits;
  for (auto index : choose(candidates, edit_budget(candidates.size(), rate), seed)) {
    const auto core = q.substr(words[index].core_begin, words[index].core_length);
    CounterRng kind_rng(kind_key(seed, index));
    auto kind = kCharacterKinds[kind_rng.below(kCharacterKinds.size())];
    // Words like "aaa" cannot be swapped; redraw among the other three.
    if (kind == TextKind::swap && !can_edit(core, kind)) {
      constexpr std::array<TextKind, 3> others = {TextKind::insert, TextKind::remove, TextKind::replace};
      kind = others[kind_rng.below(others.size())];
    }
    CounterRng rng(edit_key(seed, index));
    edits.push_back({index, draw_edit(core, kind, rng, keys)});
  }
  return apply_all(q, words, std::move(edits));
}

}  // namespace imc::textnoise
