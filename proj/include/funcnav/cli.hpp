#pragma once

// Command-line front end. Subcommands: navigate, replay, evaluate, abstract,
// build-refdb, dump-choices, verdict, make-fixture.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "funcnav/domain.hpp"
#include "funcnav/serialization.hpp"

namespace funcnav::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitTaskFailure = 1;
inline constexpr int kExitUsage = 2;

/// Everything a run needs besides the task list. Each field has a flag and a
/// config-file key of the same name (dashes become underscores).
struct Settings {
  NavConfig nav;
  std::string backend = "fixture";
  std::string wire_endpoint = "http://127.0.0.1:4444";
  std::string fixture_dir = "fixtures/apps";
  std::string llm = "remote";
  std::string llm_script;
  std::string embedder = "offline";
  std::string refdb;
  int parallel = 1;

  Json to_json() const;
};

/// Values given on the command line; unset members leave lower layers alone.
struct FlagOverrides {
  std::optional<std::string> backend;
  std::optional<std::string> wire_endpoint;
  std::optional<std::string> fixture_dir;
  std::optional<std::string> llm;
  std::optional<std::string> llm_script;
  std::optional<std::string> embedder;
  std::optional<std::string> refdb;
  std::optional<int> parallel;
  std::optional<int> top_k;
  std::optional<int> step_limit;
  bool no_descriptions = false;
  bool no_planning = false;
};

/// Overlays a config document onto settings. Relative paths in it resolve
/// against base_dir. Unknown keys and invalid values are kInvalidArgument.
Settings apply_config(Settings settings, const Json& config, const std::filesystem::path& base_dir = {});

/// Flag > config file > default.
Settings resolve_settings(const FlagOverrides& flags, const std::optional<Json>& config,
                          const std::filesystem::path& config_dir = {});

/// Runs one invocation (args exclude the program name). Machine outputs go
/// to files; out receives human-readable results and err receives usage
/// text and diagnostics.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace funcnav::cli
