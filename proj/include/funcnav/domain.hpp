#pragma once

// Core data model shared by every pipeline stage.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace funcnav {

enum class TaskKind { kConcrete, kFunctionality };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view text);

/// A one-sentence task (or abstract functionality) to perform on a website.
struct TaskSpec {
  std::string id;
  std::string website_name;
  std::string start_url;
  std::string description;
  TaskKind kind = TaskKind::kConcrete;
  std::optional<int> reference_length;  // ground-truth step count, when known

  /// Throws kInvalidArgument on an empty description or reference_length < 1.
  void validate() const;
};

enum class ActionType { kClick, kType, kSelect };

std::string_view to_string(ActionType type);
/// Accepts "click", "type", "select" (case-insensitive); kIllegalActionType otherwise.
ActionType parse_action_type(std::string_view text);

/// Text for type actions, option index for select actions, nothing for clicks.
using ActionInput = std::variant<std::monostate, std::string, int>;

struct Action {
  std::string element_xpath;
  std::string element_outer_html;
  ActionType action_type = ActionType::kClick;
  ActionInput input;

  bool has_input() const { return !std::holds_alternative<std::monostate>(input); }
  const std::string* text() const { return std::get_if<std::string>(&input); }
  const int* option_index() const { return std::get_if<int>(&input); }

  bool operator==(const Action&) const = default;
};

/// Input present iff type/select; text for type, non-negative index for select.
/// Throws kInvalidActionInput on violation.
void check_action_input(ActionType type, const ActionInput& input);

struct BBox {
  double x = 0;
  double y = 0;
  double width = 0;
  double height = 0;

  double center_x() const { return x + width / 2.0; }
  double center_y() const { return y + height / 2.0; }
  bool empty() const { return width <= 0 || height <= 0; }
  /// True when the box overlaps the [0, w) x [0, h) viewport.
  bool intersects(double viewport_width, double viewport_height) const;

  bool operator==(const BBox&) const = default;
};

double center_distance(const BBox& a, const BBox& b);

/// One candidate element the agent may act on.
struct ActionableElement {
  int ordinal = 0;
  std::string tag_name;
  std::string outer_html;
  std::string cleaned_html;
  std::string inner_text;
  std::string xpath;
  BBox bbox;
  std::vector<std::string> neighbour_texts;
  std::optional<std::vector<std::string>> select_options;
  std::optional<std::string> description;
  double score = 0.0;
  int previously_selected_count = 0;
  // Capture-time facts used for action legality.
  bool accepts_text = false;
  bool has_listener = false;

  /// Throws kInvalidArgument when a structural invariant is broken.
  void check_invariants(int neighbor_count) const;
};

/// Rendered element carrying visible text; the neighbour candidate pool.
struct TextBlock {
  std::string xpath;
  std::string text;
  BBox bbox;
};

struct Screenshot {
  std::vector<std::uint8_t> png;
  int width = 0;
  int height = 0;
};

struct WebpageContext {
  std::string context;
  std::vector<std::string> sub_functionalities;

  bool operator==(const WebpageContext&) const = default;
};

/// The predicted next step: either the Done sentinel or a sentence.
class NextStep {
 public:
  static NextStep done() { return NextStep(); }
  /// kInvalidArgument on an empty sentence.
  static NextStep step(std::string sentence);

  bool is_done() const { return !sentence_.has_value(); }
  /// Empty for Done.
  const std::string& sentence() const;

  bool operator==(const NextStep&) const = default;

 private:
  NextStep() = default;
  std::optional<std::string> sentence_;
};

struct PageState {
  int step_index = 0;
  std::string url;
  std::string meta_description;
  Screenshot screenshot;
  std::vector<ActionableElement> elements;
  std::vector<TextBlock> text_blocks;
  std::optional<WebpageContext> context;
};

enum class Termination { kDone, kNoActions, kStepLimit, kError };

std::string_view to_string(Termination termination);
Termination parse_termination(std::string_view text);

struct TrajectoryRecord {
  Action action;
  std::string screenshot_ref;  // pre-step screenshot, relative to the trace dir
  std::optional<WebpageContext> context;  // absent when planning is disabled
  NextStep next_step = NextStep::done();

  bool operator==(const TrajectoryRecord&) const = default;
};

/// Observation at which the loop stopped (no action attached).
struct FinalObservation {
  std::string screenshot_ref;
  std::optional<WebpageContext> context;
  std::optional<NextStep> next_step;

  bool operator==(const FinalObservation&) const = default;
};

struct Trajectory {
  std::string task_id;
  std::string task;
  std::optional<std::string> concretized_task;
  std::vector<TrajectoryRecord> records;
  Termination termination = Termination::kError;
  std::optional<std::string> error_detail;
  std::optional<FinalObservation> final_step;

  /// Throws kInvalidArgument on a broken invariant.
  void check_invariants(int step_limit) const;

  bool operator==(const Trajectory&) const = default;
};

struct NavConfig {
  int top_k = 40;
  int step_limit = 20;
  int neighbor_count = 5;
  double neighbor_threshold = 300.0;  // CSS px
  int batch_size = 10;
  int retrieval_k = 3;
  double penalty_factor = 0.5;
  double temperature = 0.0;
  bool enable_descriptions = true;
  bool enable_planning = true;
  int html_truncation_limit = 2000;  // characters
  bool concurrent_description_batches = false;

  void validate() const;
};

/// Legality of an action for an element kind: select only on <select>, type
/// only on text-accepting elements, click anywhere.
/// Returns the action unchanged; kIllegalActionType / kInvalidActionInput otherwise.
Action validate_action(const Action& action, const ActionableElement& element);

/// One executed action and the label it was chosen under (its description,
/// or its inner text when there is none).
struct HistoryEntry {
  Action action;
  std::string label;
};

/// "<action_type> on <label> [input]".
std::string describe_action(const HistoryEntry& entry);
/// Numbered lines "step k: <action_type> on <label> [input]"; "none" when empty.
std::string format_history(const std::vector<HistoryEntry>& history);

}  // namespace funcnav
