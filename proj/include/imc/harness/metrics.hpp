#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace imc::harness {

// Lowercase, drop ASCII punctuation, split on whitespace.
std::vector<std::string> tokenize(std::string_view text);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Unigram overlap with counts clipped to the other side's multiplicities.
// All zero when either side has no tokens.
RougeScore rouge1(std::string_view prediction, std::string_view reference);

// Sentence BLEU up to 4-grams with uniform weights. Orders 2-4 use add-one
// smoothing, the unigram precision does not, so a prediction sharing no
// word with the reference scores 0. Brevity penalty exp(1 - r/c) for c < r.
double bleu(std::string_view prediction, std::string_view reference);

// Lowercased and trimmed.
std::string normalize_answer(std::string_view s);

// Option letter of a multiple-choice reference such as "B", "(b)" or "C.";
// nullopt when the reference is not a bare option.
std::optional<char> reference_option(std::string_view reference);
// Option letter claimed by a free-form reply ("The answer is (B).", "b",
// "C. Liver"); nullopt when none is recognised. Always lowercase.
std::optional<char> extract_option(std::string_view reply);

// Option letters are compared when the reference is a bare option,
// normalized strings otherwise.
bool closed_match(std::string_view prediction, std::string_view reference);

// Percentage of matching rows. Sizes must agree; empty input gives 0.
double accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& references);

}  // namespace imc::harness
