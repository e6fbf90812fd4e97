#pragma once

// Decision making: annotate the screenshot with choice indices, ask the
// strong model for an action, and ground the answer onto a page element.

#include <optional>
#include <string>
#include <vector>

#include "funcnav/choices.hpp"
#include "funcnav/domain.hpp"
#include "funcnav/llm_gateway.hpp"

namespace funcnav {

struct ActionChoice {
  int index = 0;
  ActionType action = ActionType::kClick;
  ActionInput input;

  bool operator==(const ActionChoice&) const = default;
};

struct Badge {
  int ordinal = 0;
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  BBox target;
};

struct Annotation {
  Screenshot image;
  std::vector<Badge> badges;  // on-screen elements only, in rank order

  Json manifest() const;
};

/// Draws a 2 px outline around every ranked element that intersects the
/// screenshot and a filled badge with its ordinal at the box's top-left
/// corner. Dimensions are preserved; no ranked elements returns the input
/// bytes unchanged. kImageDecodeFailed.
Annotation annotate_screenshot(const Screenshot& screenshot, const RankedChoices& ranked);

/// "<ordinal>: <tag> <description>" lines for the decision prompt.
std::string element_listing(const RankedChoices& ranked);

/// Reads {"index", "action", "input"?} and checks it against the list:
/// kMalformedOutput, kIndexOutOfRange, kIllegalActionType, kInvalidActionInput.
ActionChoice parse_action_choice(const Json& json, const RankedChoices& ranked);

struct DecisionInput {
  std::string task;
  NextStep next_step = NextStep::done();
  std::optional<WebpageContext> context;  // absent when planning is disabled
  std::vector<HistoryEntry> history;
  const RankedChoices* ranked = nullptr;
  const Screenshot* annotated = nullptr;
};

/// Strong-tier decision. An invalid choice earns one corrective re-prompt
/// carrying the violation message; a second invalid answer is rethrown.
ActionChoice select_action(const DecisionInput& input, LlmGateway& gateway, double temperature = 0.0);

/// The Action for a valid choice: the indexed element's xpath and outer HTML,
/// the action type and its payload. Type actions carry no companion click.
Action ground(const ActionChoice& choice, const RankedChoices& ranked);

}  // namespace funcnav
