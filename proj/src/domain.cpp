#include "funcnav/domain.hpp"

#include <algorithm>
#include <cmath>

#include "funcnav/error.hpp"
#include "funcnav/util.hpp"

namespace funcnav {

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::kConcrete ? "concrete" : "functionality";
}

TaskKind parse_task_kind(std::string_view text) {
  auto lower = util::to_lower(text);
  if (lower == "concrete") return TaskKind::kConcrete;
  if (lower == "functionality") return TaskKind::kFunctionality;
  fail(ErrorCode::kInvalidArgument, "unknown task kind '" + std::string(text) + "'");
}

void TaskSpec::validate() const {
  if (util::trim(description).empty()) {
    fail(ErrorCode::kInvalidArgument, "task '" + id + "' has an empty description");
  }
  if (reference_length && *reference_length < 1) {
    fail(ErrorCode::kInvalidArgument, "task '" + id + "' has reference_length < 1");
  }
}

std::string_view to_string(ActionType type) {
  switch (type) {
    case ActionType::kClick: return "click";
    case ActionType::kType: return "type";
    case ActionType::kSelect: return "select";
  }
  return "click";
}

ActionType parse_action_type(std::string_view text) {
  auto lower = util::to_lower(util::trim(text));
  if (lower == "click") return ActionType::kClick;
  if (lower == "type") return ActionType::kType;
  if (lower == "select") return ActionType::kSelect;
  fail(ErrorCode::kIllegalActionType, "unknown action type '" + std::string(text) + "'");
}

void check_action_input(ActionType type, const ActionInput& input) {
  switch (type) {
    case ActionType::kClick:
      if (!std::holds_alternative<std::monostate>(input)) {
        fail(ErrorCode::kInvalidActionInput, "click takes no input");
      }
      return;
    case ActionType::kType:
      if (!std::holds_alternative<std::string>(input)) {
        fail(ErrorCode::kInvalidActionInput, "type requires a text input");
      }
      return;
    case ActionType::kSelect:
      if (const int* index = std::get_if<int>(&input); index == nullptr || *index < 0) {
        fail(ErrorCode::kInvalidActionInput, "select requires a non-negative option index");
      }
      return;
  }
}

bool BBox::intersects(double viewport_width, double viewport_height) const {
  if (empty()) return false;
  return x < viewport_width && y < viewport_height && x + width > 0 && y + height > 0;
}

double center_distance(const BBox& a, const BBox& b) {
  return std::hypot(a.center_x() - b.center_x(), a.center_y() - b.center_y());
}

void ActionableElement::check_invariants(int neighbor_count) const {
  if (xpath.empty()) fail(ErrorCode::kInvalidArgument, "element has an empty xpath");
  if (bbox.width < 0 || bbox.height < 0) {
    fail(ErrorCode::kInvalidArgument, "element " + xpath + " has a negative bbox size");
  }
  if (static_cast<int>(neighbour_texts.size()) > neighbor_count) {
    fail(ErrorCode::kInvalidArgument, "element " + xpath + " has too many neighbours");
  }
  if (select_options && tag_name != "select") {
    fail(ErrorCode::kInvalidArgument, "element " + xpath + " has options but is not a select");
  }
}

NextStep NextStep::step(std::string sentence) {
  if (util::trim(sentence).empty()) fail(ErrorCode::kInvalidArgument, "empty next-step sentence");
  NextStep out;
  out.sentence_ = std::move(sentence);
  return out;
}

const std::string& NextStep::sentence() const {
  static const std::string kEmpty;
  return sentence_ ? *sentence_ : kEmpty;
}

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::kDone: return "done";
    case Termination::kNoActions: return "no_actions";
    case Termination::kStepLimit: return "step_limit";
    case Termination::kError: return "error";
  }
  return "error";
}

Termination parse_termination(std::string_view text) {
  if (text == "done") return Termination::kDone;
  if (text == "no_actions") return Termination::kNoActions;
  if (text == "step_limit") return Termination::kStepLimit;
  if (text == "error") return Termination::kError;
  fail(ErrorCode::kInvalidArgument, "unknown termination '" + std::string(text) + "'");
}

void Trajectory::check_invariants(int step_limit) const {
  if (static_cast<int>(records.size()) > step_limit) {
    fail(ErrorCode::kInvalidArgument, "trajectory longer than the step limit");
  }
  for (const auto& record : records) {
    check_action_input(record.action.action_type, record.action.input);
  }
  if (termination == Termination::kDone) {
    if (!final_step || !final_step->next_step || !final_step->next_step->is_done()) {
      fail(ErrorCode::kInvalidArgument, "termination 'done' without a Done next step");
    }
  }
}

void NavConfig::validate() const {
  auto positive = [](int value, const char* name) {
    if (value < 1) fail(ErrorCode::kInvalidArgument, std::string(name) + " must be positive");
  };
  positive(top_k, "top_k");
  positive(step_limit, "step_limit");
  positive(neighbor_count, "neighbor_count");
  positive(batch_size, "batch_size");
  positive(retrieval_k, "retrieval_k");
  positive(html_truncation_limit, "html_truncation_limit");
  if (!(neighbor_threshold > 0)) fail(ErrorCode::kInvalidArgument, "neighbor_threshold must be positive");
  if (!(penalty_factor > 0 && penalty_factor <= 1)) {
    fail(ErrorCode::kInvalidArgument, "penalty_factor must be in (0, 1]");
  }
}

Action validate_action(const Action& action, const ActionableElement& element) {
  if (action.element_xpath != element.xpath) {
    fail(ErrorCode::kPreconditionViolated,
         "action targets " + action.element_xpath + " but element is " + element.xpath);
  }
  switch (action.action_type) {
    case ActionType::kClick:
      break;
    case ActionType::kType:
      if (!element.accepts_text) {
        fail(ErrorCode::kIllegalActionType,
             "type is not legal on <" + element.tag_name + "> (element does not accept text)");
      }
      break;
    case ActionType::kSelect:
      if (element.tag_name != "select") {
        fail(ErrorCode::kIllegalActionType, "select is only legal on <select>, not <" +
                                                element.tag_name + ">");
      }
      break;
  }
  check_action_input(action.action_type, action.input);
  if (const int* index = action.option_index(); index && element.select_options &&
                                                 *index >= static_cast<int>(element.select_options->size())) {
    fail(ErrorCode::kInvalidActionInput,
         "option index " + std::to_string(*index) + " out of range for " +
             std::to_string(element.select_options->size()) + " options");
  }
  return action;
}

std::string describe_action(const HistoryEntry& entry) {
  std::string out = std::string(to_string(entry.action.action_type)) + " on " + entry.label;
  if (const auto* text = entry.action.text()) out += " [" + *text + "]";
  if (const auto* index = entry.action.option_index()) out += " [option " + std::to_string(*index) + "]";
  return out;
}

std::string format_history(const std::vector<HistoryEntry>& history) {
  if (history.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i > 0) out += '\n';
    out += "step " + std::to_string(i + 1) + ": " + describe_action(history[i]);
  }
  return out;
}

}  // namespace funcnav
