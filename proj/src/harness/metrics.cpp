#include "imc/harness/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <regex>

#include "imc/common/error.hpp"

namespace imc::harness {

namespace {

using Counts = std::map<std::vector<std::string>, std::size_t>;

Counts ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  Counts out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++out[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                   tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

// Matches of `pred` n-grams, each clipped to its count in `ref`.
std::size_t clipped_matches(const Counts& pred, const Counts& ref) {
  std::size_t m = 0;
  for (const auto& [gram, count] : pred) {
    const auto it = ref.find(gram);
    if (it != ref.end()) m += std::min(count, it->second);
  }
  return m;
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
bool is_option(char c) { return (c >= 'a' && c <= 'e') || (c >= 'A' && c <= 'E'); }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string_view trim_view(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

// Letter right after a keyword, at s[i]. Uppercase letters only need a word
// boundary; a lowercase one must be followed by punctuation or the end, so
// "answer is a lesion" does not read as option a.
std::optional<char> letter_at(std::string_view s, std::size_t i) {
  if (i < s.size() && s[i] == '(') {
    if (i + 2 < s.size() && is_option(s[i + 1]) && s[i + 2] == ')') return lower(s[i + 1]);
    return std::nullopt;
  }
  if (i >= s.size() || !is_option(s[i])) return std::nullopt;
  const char c = s[i];
  const auto rest = s.substr(i + 1);
  if (std::isupper(static_cast<unsigned char>(c)) && (rest.empty() || !is_alnum(rest.front()))) return lower(c);
  if (trim_view(rest).empty() || std::string_view(".,;:!)").find(rest.front()) != std::string_view::npos)
    return lower(c);
  return std::nullopt;
}

std::optional<char> after_keyword(std::string_view reply) {
  std::string low(reply);
  std::transform(low.begin(), low.end(), low.begin(), lower);
  for (std::size_t pos = 0; pos < low.size(); ++pos) {
    for (std::string_view kw : {"answer", "option", "choice"}) {
      if (low.compare(pos, kw.size(), kw) != 0) continue;
      if (pos > 0 && is_alnum(low[pos - 1])) continue;
      std::size_t i = pos + kw.size();
      const auto skip_space = [&] {
        while (i < low.size() && std::isspace(static_cast<unsigned char>(low[i]))) ++i;
      };
      skip_space();
      if (low.compare(i, 2, "is") == 0 && (i + 2 >= low.size() || !is_alnum(low[i + 2]))) i += 2;
      else if (i < low.size() && low[i] == ':') ++i;
      skip_space();
      if (const auto letter = letter_at(reply, i)) return letter;
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else if (!std::ispunct(u)) {
      cur += static_cast<char>(std::tolower(u));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

RougeScore rouge1(std::string_view prediction, std::string_view reference) {
  const auto p = tokenize(prediction), r = tokenize(reference);
  if (p.empty() || r.empty()) return {};
  const auto overlap = static_cast<double>(clipped_matches(ngrams(p, 1), ngrams(r, 1)));
  RougeScore s;
  s.precision = overlap / static_cast<double>(p.size());
  s.recall = overlap / static_cast<double>(r.size());
  if (overlap > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

double bleu(std::string_view prediction, std::string_view reference) {
  const auto p = tokenize(prediction), r = tokenize(reference);
  if (p.empty() || r.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const double matches = static_cast<double>(clipped_matches(ngrams(p, n), ngrams(r, n)));
    const double total = p.size() >= n ? static_cast<double>(p.size() - n + 1) : 0.0;
    if (n == 1 && matches == 0.0) return 0.0;
    const double precision = n == 1 ? matches / total : (matches + 1.0) / (total + 1.0);
    log_sum += 0.25 * std::log(precision);
  }
  const double c = static_cast<double>(p.size()), len_r = static_cast<double>(r.size());
  const double brevity = c < len_r ? std::exp(1.0 - len_r / c) : 1.0;
  return brevity * std::exp(log_sum);
}

std::string normalize_answer(std::string_view s) {
  std::string out(trim_view(s));
  std::transform(out.begin(), out.end(), out.begin(), lower);
  return out;
}

std::optional<char> reference_option(std::string_view reference) {
  static const std::regex bare(R"(^\(?([A-Ea-e])\)?[.:]?$)");
  const std::string s(trim_view(reference));
  std::smatch m;
  if (!std::regex_match(s, m, bare)) return std::nullopt;
  return lower(m[1].str()[0]);
}

std::optional<char> extract_option(std::string_view reply) {
  const auto s = trim_view(reply);
  if (const auto bare = reference_option(s)) return bare;
  if (const auto kw = after_keyword(s)) return kw;
  for (std::size_t i = 0; i + 2 < s.size(); ++i)
    if (s[i] == '(' && is_option(s[i + 1]) && s[i + 2] == ')') return lower(s[i + 1]);
  // "C. Liver", "b) liver"
  if (s.size() >= 2 && is_option(s[0]) && std::string_view(".):").find(s[1]) != std::string_view::npos)
    return lower(s[0]);
  return std::nullopt;
}

bool closed_match(std::string_view prediction, std::string_view reference) {
  if (const auto option = reference_option(reference)) return extract_option(prediction) == option;
  return normalize_answer(prediction) == normalize_answer(reference);
}

double accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& references) {
  require(predictions.size() == references.size(), "accuracy: prediction and reference counts differ");
  if (predictions.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) hits += closed_match(predictions[i], references[i]);
  return 100.0 * static_cast<double>(hits) / static_cast<double>(predictions.size());
}

}  // namespace imc::harness
