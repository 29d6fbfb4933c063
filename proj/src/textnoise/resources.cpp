#include <cctype>
#include <sstream>

#include "imc/common/error.hpp"
#include "imc/common/resources.hpp"
#include "imc/common/rng.hpp"
#include "imc/textnoise/textnoise.hpp"

namespace imc::textnoise {

namespace {

std::string strip(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

}  // namespace

DistractorPool::DistractorPool(std::vector<std::string> sentences) : sentences_(std::move(sentences)) {
  require(!sentences_.empty(), "distractor pool is empty");
  for (const auto& s : sentences_) require(!strip(s).empty(), "distractor pool contains an empty sentence");
}

DistractorPool DistractorPool::parse(std::string_view text) {
  std::vector<std::string> sentences;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto s = strip(line);
    if (!s.empty()) sentences.push_back(std::move(s));
  }
  return DistractorPool(std::move(sentences));
}

DistractorPool DistractorPool::load(const std::string& path) { return parse(resources::read_file(path)); }

const DistractorPool& DistractorPool::builtin() {
  static const DistractorPool pool = parse(resources::get("distractors"));
  return pool;
}

const std::string& DistractorPool::pick(std::uint64_t seed) const {
  CounterRng rng(seed);
  return sentences_[rng.below(sentences_.size())];
}

KeyboardMap KeyboardMap::parse(std::string_view text) {
  KeyboardMap map;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = strip(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    std::istringstream fields(body);
    std::string key, neighbors;
    fields >> key >> neighbors;
    const bool ok = key.size() == 1 && std::islower(static_cast<unsigned char>(key[0])) && !neighbors.empty();
    if (!ok) fail(ErrorCode::parse_error, "keyboard map line " + std::to_string(line_no) + ": expected '<key> <neighbors>'");
    for (char c : neighbors) {
      if (!std::islower(static_cast<unsigned char>(c)) || c == key[0])
        fail(ErrorCode::parse_error, "keyboard map line " + std::to_string(line_no) + ": bad neighbor '" +
                                         std::string(1, c) + "'");
    }
    map.neighbors_[static_cast<std::size_t>(key[0] - 'a')] = neighbors;
  }
  for (std::size_t i = 0; i < map.neighbors_.size(); ++i) {
    if (map.neighbors_[i].empty())
      fail(ErrorCode::parse_error, "keyboard map has no entry for '" + std::string(1, static_cast<char>('a' + i)) + "'");
  }
  return map;
}

const KeyboardMap& KeyboardMap::builtin() {
  static const KeyboardMap map = parse(resources::get("qwerty_neighbors"));
  return map;
}

std::string_view KeyboardMap::neighbors(char c) const {
  const auto lower = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower < 'a' || lower > 'z') return {};
  return neighbors_[static_cast<std::size_t>(lower - 'a')];
}

}  // namespace imc::textnoise
