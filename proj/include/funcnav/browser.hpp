#pragma once

// Page observation and action execution. Two backends: a W3C WebDriver
// client for real browsers and a fixture backend that replays recorded page
// snapshots through a transition table.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "funcnav/domain.hpp"

namespace funcnav {

enum class BackendKind { kWire, kFixture };

std::string_view to_string(BackendKind kind);
BackendKind parse_backend_kind(std::string_view text);

struct BrowserConfig {
  BackendKind backend = BackendKind::kFixture;
  std::filesystem::path fixture_dir;  // root holding one directory per app
  std::string wire_endpoint = "http://127.0.0.1:4444";
  std::chrono::milliseconds quiescence{500};
  std::chrono::milliseconds settle_cap{10000};
};

struct ExecutionReport {
  bool navigated = false;
  std::string new_url;
};

/// One open page. Calls on a session must be serialized by the caller.
class Session {
 public:
  virtual ~Session() = default;

  virtual const std::string& session_id() const = 0;
  virtual BackendKind backend() const = 0;
  virtual std::string current_url() const = 0;
  virtual bool is_open() const = 0;

  /// Read-only snapshot: url, meta description, viewport screenshot and the
  /// complete actionable-element set, before any ranking.
  virtual PageState capture_state(int step_index) = 0;
  virtual ExecutionReport execute(const Action& action) = 0;
  virtual void close() = 0;

  /// Current fixture state id; empty for live browsers.
  virtual std::optional<std::string> fixture_state() const { return std::nullopt; }
};

/// For the fixture backend, app_name selects the directory under
/// config.fixture_dir and start_url is informational.
std::unique_ptr<Session> open_session(const BrowserConfig& config, std::string_view start_url,
                                      std::string_view app_name);

// ---- fixture backend data -------------------------------------------------

struct FixtureTransition {
  std::string from;
  std::string xpath;
  ActionType action = ActionType::kClick;
  std::string input_pattern;  // ECMAScript regex, full match; empty matches anything
  std::string to;
};

struct FixtureSnapshot {
  std::string state_id;
  std::string url;
  std::string html;
  std::string meta_description;
  std::map<std::string, BBox> element_geometry;
  std::vector<std::uint8_t> screenshot;
  std::vector<FixtureTransition> transitions;  // outgoing edges of this state
};

/// A fixture directory: states/<id>.html, screenshots/<id>.png,
/// geometry.json ({state: {xpath: [x, y, w, h]}}) and transitions.json.
struct FixtureApp {
  std::string name;
  std::string initial_state;
  std::map<std::string, FixtureSnapshot> states;

  /// kUnknownFixtureApp when the directory or its transitions file is
  /// missing; kInvalidSpec when the contents are inconsistent.
  static FixtureApp load(const std::filesystem::path& dir);
};

/// Extracts the PageState of one snapshot. Shared by the fixture session and
/// the tooling that inspects fixture states directly.
PageState capture_fixture_state(const FixtureSnapshot& snapshot, int step_index);

/// Meta description content from a full HTML document; empty when absent.
std::string extract_meta_description(std::string_view html);

// ---- wire backend helpers (exposed for tests) -----------------------------

/// Script run through WebDriver "execute/sync" that returns the page snapshot.
std::string_view wire_capture_script();
/// Parses the capture script's result, re-applying the actionability predicate.
PageState parse_wire_capture(const std::string& json_text, int step_index);

}  // namespace funcnav
