#pragma once

// Versioned prompt templates. Each asset has a [system] section (task
// expectations, constraints, output format) and a [user] section with
// {{placeholders}}.

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace funcnav {

struct PromptTemplate {
  std::string name;
  int version = 0;
  std::string system;
  std::string user;

  /// Substitutes {{key}} placeholders. A line whose placeholders all resolve
  /// to absent or empty values is dropped, so optional inputs leave no trace.
  std::string render_user(const std::map<std::string, std::string>& values) const;
};

/// kInvalidArgument for an unknown name.
const PromptTemplate& prompt_template(std::string_view name);
std::vector<std::string> prompt_names();

PromptTemplate parse_prompt_asset(std::string_view name, std::string_view text);

}  // namespace funcnav
