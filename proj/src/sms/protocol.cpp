#include <algorithm>
#include <cctype>
#include <regex>

#include "imc/common/error.hpp"
#include "imc/common/resources.hpp"
#include "imc/sms/sms.hpp"

namespace imc::sms {

std::string_view to_string(AgentRole role) {
  switch (role) {
    case AgentRole::classifier_denoiser: return "classifier_denoiser";
    case AgentRole::residual_checker: return "residual_checker";
    case AgentRole::optimal_selector: return "optimal_selector";
    case AgentRole::output_validator: return "output_validator";
  }
  return "unknown";
}

std::optional<AgentRole> parse_role(std::string_view name) {
  for (auto r : kAllRoles)
    if (to_string(r) == name) return r;
  return std::nullopt;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

// ---- prompts --------------------------------------------------------------

PromptTemplate parse_template(const std::string& text, const std::string& source) {
  const auto sys = text.find("[system]");
  const auto usr = text.find("[user]");
  if (sys == std::string::npos || usr == std::string::npos || usr < sys)
    fail(ErrorCode::parse_error, source + ": prompt template needs a [system] section followed by a [user] section");
  PromptTemplate t;
  t.system = trim(std::string_view(text).substr(sys + 8, usr - sys - 8));
  t.user = trim(std::string_view(text).substr(usr + 6));
  if (t.system.empty() || t.user.empty()) fail(ErrorCode::parse_error, source + ": empty prompt section");
  return t;
}

PromptSet PromptSet::builtin() {
  PromptSet set;
  for (auto r : kAllRoles) {
    const std::string name = "prompt_" + std::string(to_string(r));
    set.set(r, parse_template(std::string(resources::get(name)), name));
  }
  return set;
}

PromptSet PromptSet::load_dir(const std::string& dir) {
  PromptSet set;
  for (auto r : kAllRoles) {
    const std::string path = dir + "/" + std::string(to_string(r)) + ".txt";
    set.set(r, parse_template(resources::read_file(path), path));
  }
  return set;
}

const PromptTemplate& PromptSet::at(AgentRole role) const {
  const auto it = templates_.find(role);
  require(it != templates_.end(), "no prompt template for " + std::string(to_string(role)));
  return it->second;
}

void PromptSet::set(AgentRole role, PromptTemplate t) { templates_[role] = std::move(t); }

ChatRequest PromptSet::render(AgentRole role, const std::map<std::string, std::string, std::less<>>& values) const {
  const auto& t = at(role);
  ChatRequest req;
  req.role = role;
  req.system_prompt = t.system;
  // Single left-to-right pass so substituted text is never rescanned.
  std::string out;
  std::size_t pos = 0;
  while (pos < t.user.size()) {
    const auto open = t.user.find('{', pos);
    if (open == std::string::npos) break;
    const auto close = t.user.find('}', open);
    if (close == std::string::npos) break;
    out.append(t.user, pos, open - pos);
    const std::string_view name = std::string_view(t.user).substr(open + 1, close - open - 1);
    const auto it = values.find(name);
    require(it != values.end(), "prompt for " + std::string(to_string(role)) + " uses {" + std::string(name) +
                                    "} but no value was given");
    out += it->second;
    pos = close + 1;
  }
  out.append(t.user, pos);
  req.user_content = std::move(out);
  return req;
}

// ---- reply grammar --------------------------------------------------------

Verdict parse_verdict(std::string_view reply) {
  static const std::regex marker(R"((RESULT|VERDICT)\s*:\s*(CLEAN|NOISY|VALID|INVALID)\b)", std::regex::icase);
  static const std::regex fence("```answer[ \\t]*\\r?\\n([\\s\\S]*?)```", std::regex::icase);

  Verdict v;
  std::ptrdiff_t last = -1;
  const std::string text(reply);
  for (std::sregex_iterator it(text.begin(), text.end(), marker), end; it != end; ++it) {
    const auto& m = *it;
    if (m.position(0) <= last) continue;
    std::string word = m.str(2);
    std::transform(word.begin(), word.end(), word.begin(), [](unsigned char c) { return std::tolower(c); });
    std::string head = m.str(1);
    std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::tolower(c); });
    // RESULT pairs with CLEAN/NOISY, VERDICT with VALID/INVALID.
    const bool check = word == "clean" || word == "noisy";
    if ((head == "result") != check) continue;
    last = m.position(0);
    v.parsed = true;
    v.text.clear();
    v.kind = word == "clean"   ? VerdictKind::clean
             : word == "noisy" ? VerdictKind::noisy
             : word == "valid" ? VerdictKind::valid
                               : VerdictKind::invalid;
  }
  for (std::sregex_iterator it(text.begin(), text.end(), fence), end; it != end; ++it) {
    if (it->position(0) <= last) continue;
    last = it->position(0);
    v.parsed = true;
    v.kind = VerdictKind::selection;
    v.text = trim(it->str(1));
  }
  if (!v.parsed) v.kind = VerdictKind::noisy;
  return v;
}

std::optional<std::string> extract_answer(std::string_view reply) {
  static const std::regex fence("```answer[ \\t]*\\r?\\n([\\s\\S]*?)```", std::regex::icase);
  const std::string text(reply);
  std::optional<std::string> out;
  for (std::sregex_iterator it(text.begin(), text.end(), fence), end; it != end; ++it) out = trim(it->str(1));
  return out;
}

std::string answer_block(std::string_view text) { return "```answer\n" + std::string(text) + "\n```"; }

}  // namespace imc::sms
