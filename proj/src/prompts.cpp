#include "funcnav/prompts.hpp"

#include <mutex>
#include <sstream>

#include "funcnav/error.hpp"
#include "funcnav/util.hpp"

namespace funcnav {

namespace detail {
const std::map<std::string, std::string, std::less<>>& prompt_assets();
}

PromptTemplate parse_prompt_asset(std::string_view name, std::string_view text) {
  PromptTemplate out;
  out.name = std::string(name);
  std::istringstream in{std::string(text)};
  std::string line;
  std::string* section = nullptr;
  while (std::getline(in, line)) {
    if (line.rfind("# version:", 0) == 0) {
      out.version = std::stoi(line.substr(10));
    } else if (line == "[system]") {
      section = &out.system;
    } else if (line == "[user]") {
      section = &out.user;
    } else if (section != nullptr) {
      *section += line;
      *section += '\n';
    }
  }
  out.system = util::trim(out.system);
  out.user = util::trim(out.user);
  if (out.system.empty() || out.user.empty()) {
    fail(ErrorCode::kInvalidArgument, "prompt asset '" + out.name + "' lacks a system or user section");
  }
  return out;
}

std::string PromptTemplate::render_user(const std::map<std::string, std::string>& values) const {
  std::ostringstream out;
  std::istringstream in(user);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::string rendered;
    bool had_placeholder = false;
    bool any_value = false;
    std::size_t pos = 0;
    while (true) {
      auto open = line.find("{{", pos);
      if (open == std::string::npos) {
        rendered += line.substr(pos);
        break;
      }
      auto close = line.find("}}", open);
      if (close == std::string::npos) {
        rendered += line.substr(pos);
        break;
      }
      rendered += line.substr(pos, open - pos);
      had_placeholder = true;
      auto it = values.find(line.substr(open + 2, close - open - 2));
      if (it != values.end() && !it->second.empty()) {
        rendered += it->second;
        any_value = true;
      }
      pos = close + 2;
    }
    if (had_placeholder && !any_value) continue;
    if (!first) out << '\n';
    out << rendered;
    first = false;
  }
  return out.str();
}

namespace {

const std::map<std::string, PromptTemplate, std::less<>>& registry() {
  static const auto kTemplates = [] {
    std::map<std::string, PromptTemplate, std::less<>> out;
    for (const auto& [name, text] : detail::prompt_assets()) out.emplace(name, parse_prompt_asset(name, text));
    return out;
  }();
  return kTemplates;
}

}  // namespace

const PromptTemplate& prompt_template(std::string_view name) {
  const auto& templates = registry();
  auto it = templates.find(name);
  if (it == templates.end()) fail(ErrorCode::kInvalidArgument, "unknown prompt '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> prompt_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : registry()) out.push_back(name);
  return out;
}

}  // namespace funcnav
