#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace imc::textnoise {

enum class TextKind { insert, remove, swap, replace, unrelated_sentence };

inline constexpr std::array<TextKind, 4> kCharacterKinds = {TextKind::insert, TextKind::remove, TextKind::swap,
                                                            TextKind::replace};
inline constexpr std::array<TextKind, 5> kAllTextKinds = {TextKind::insert, TextKind::remove, TextKind::swap,
                                                          TextKind::replace, TextKind::unrelated_sentence};

// Names are "insert", "delete", "swap", "replace", "unrelated_sentence".
std::string_view to_string(TextKind kind);
TextKind parse_text_kind(std::string_view name);

struct TextCorruptionSpec {
  TextKind kind = TextKind::swap;
  double rate = 0.25;  // ignored by unrelated_sentence
  std::uint64_t seed = 0;
};

class DistractorPool {
 public:
  // One sentence per line; blank lines are skipped. Throws invalid-input
  // when no sentence remains.
  static DistractorPool parse(std::string_view text);
  static DistractorPool load(const std::string& path);
  static const DistractorPool& builtin();

  explicit DistractorPool(std::vector<std::string> sentences);
  const std::vector<std::string>& sentences() const { return sentences_; }
  const std::string& pick(std::uint64_t seed) const;

 private:
  std::vector<std::string> sentences_;
};

// Letter adjacency on a QWERTY layout, lowercase keys only.
class KeyboardMap {
 public:
  static KeyboardMap parse(std::string_view text);
  static const KeyboardMap& builtin();
  // Neighbors of a letter (either case) in lowercase; empty for non-letters.
  std::string_view neighbors(char c) const;

 private:
  std::array<std::string, 26> neighbors_;
};

// A whitespace-delimited token with its letter core located. Leading and
// trailing punctuation is outside the core and never edited.
struct Word {
  std::size_t token_begin = 0;
  std::size_t core_begin = 0;
  std::size_t core_length = 0;
  bool eligible = false;  // core is all ASCII letters and at least 3 long
};

std::vector<Word> find_words(std::string_view text);

// One edit inside a word core. For swap, characters position and
// position + 1 are exchanged; for insert, letter goes before position.
struct WordEdit {
  TextKind kind = TextKind::swap;
  std::size_t position = 0;
  char letter = 0;  // insert and replace only
};

std::string apply_edit(std::string_view word, const WordEdit& edit);

// Applies an edit to the core of the word_index-th token of text.
std::string force_edit(std::string_view text, std::size_t word_index, const WordEdit& edit);

// Whether a word core admits an edit of this kind that changes it. Swap needs
// two adjacent distinct letters; the other kinds accept any eligible core.
bool can_edit(std::string_view core, TextKind kind);

struct EditRecord {
  std::size_t word_index = 0;  // token index in the input
  WordEdit edit;
};

struct TextCorruptionResult {
  std::string text;
  bool no_op = false;
  std::vector<EditRecord> edits;  // in token order
};

// Number of words corrupted for a given eligible count and rate.
std::size_t edit_budget(std::size_t eligible, double rate);

TextCorruptionResult corrupt_text(std::string_view q, const TextCorruptionSpec& spec,
                                  const DistractorPool& pool = DistractorPool::builtin(),
                                  const KeyboardMap& keys = KeyboardMap::builtin());

// Like corrupt_text with a character kind drawn uniformly per selected word.
// Word selection and per-word edit placement use the same streams as
// corrupt_text, so a word drawn as swap gets the same edit a swap run gives.
TextCorruptionResult mixed_character_noise(std::string_view q, double rate, std::uint64_t seed,
                                           const KeyboardMap& keys = KeyboardMap::builtin());

}  // namespace imc::textnoise
