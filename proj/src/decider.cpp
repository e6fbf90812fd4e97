#include "funcnav/decider.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "funcnav/error.hpp"
#include "funcnav/image.hpp"
#include "funcnav/prompts.hpp"
#include "funcnav/util.hpp"

namespace funcnav {

namespace {

constexpr int kOutline = 2;
constexpr int kBadgeScale = 2;
constexpr int kBadgePadding = 3;

const std::array<Rgba, 8> kPalette = {{
    {230, 25, 75, 255},
    {0, 130, 200, 255},
    {60, 180, 75, 255},
    {145, 30, 180, 255},
    {245, 130, 48, 255},
    {0, 128, 128, 255},
    {128, 0, 0, 255},
    {0, 0, 128, 255},
}};

int whole_number(const Json& value, std::string_view field) {
  if (value.is_number_integer()) return value.get<int>();
  if (value.is_number_float()) {
    double d = value.get<double>();
    if (std::floor(d) == d) return static_cast<int>(d);
  }
  if (value.is_string()) {
    auto text = util::trim(value.get<std::string>());
    if (!text.empty() && std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
        text.size() < 10) {
      return std::stoi(text);
    }
  }
  fail(ErrorCode::kMalformedOutput, std::string(field) + " must be a whole number");
}

}  // namespace

Json Annotation::manifest() const {
  Json out;
  out["width"] = image.width;
  out["height"] = image.height;
  out["badges"] = Json::array();
  for (const auto& badge : badges) {
    out["badges"].push_back({{"ordinal", badge.ordinal},
                             {"x", badge.x},
                             {"y", badge.y},
                             {"width", badge.width},
                             {"height", badge.height},
                             {"bbox", to_json(badge.target)}});
  }
  return out;
}

Annotation annotate_screenshot(const Screenshot& screenshot, const RankedChoices& ranked) {
  Annotation out;
  out.image = screenshot;
  if (ranked.items.empty()) return out;

  Raster raster = Raster::decode_png(screenshot.png);
  const int width = raster.width();
  const int height = raster.height();
  for (const auto& item : ranked.items) {
    if (item.bbox.empty() || !item.bbox.intersects(width, height)) continue;
    const Rgba color = kPalette[static_cast<std::size_t>(item.ordinal) % kPalette.size()];
    const int bx = static_cast<int>(std::lround(item.bbox.x));
    const int by = static_cast<int>(std::lround(item.bbox.y));
    raster.outline_rect(bx, by, static_cast<int>(std::lround(item.bbox.width)),
                        static_cast<int>(std::lround(item.bbox.height)), kOutline, color);

    const std::string label = std::to_string(item.ordinal);
    Badge badge;
    badge.ordinal = item.ordinal;
    badge.width = Raster::text_width(label, kBadgeScale) + 2 * kBadgePadding;
    badge.height = Raster::text_height(kBadgeScale) + 2 * kBadgePadding;
    badge.x = std::clamp(bx, 0, std::max(0, width - badge.width));
    badge.y = std::clamp(by, 0, std::max(0, height - badge.height));
    badge.target = item.bbox;
    raster.fill_rect(badge.x, badge.y, badge.width, badge.height, color);
    raster.draw_text(badge.x + kBadgePadding, badge.y + kBadgePadding, label, kBadgeScale, {255, 255, 255, 255});
    out.badges.push_back(badge);
  }
  out.image = Screenshot{raster.encode_png(), width, height};
  return out;
}

std::string element_listing(const RankedChoices& ranked) {
  std::string out;
  for (const auto& item : ranked.items) {
    if (!out.empty()) out += '\n';
    out += std::to_string(item.ordinal) + ": <" + item.tag_name + "> " +
           (item.description ? *item.description : fallback_description(item));
    if (item.select_options) {
      out += " (options:";
      for (std::size_t i = 0; i < item.select_options->size(); ++i) {
        out += (i == 0 ? " " : "; ") + std::to_string(i) + " = " + (*item.select_options)[i];
      }
      out += ")";
    }
  }
  return out;
}

ActionChoice parse_action_choice(const Json& json, const RankedChoices& ranked) {
  if (!json.is_object()) fail(ErrorCode::kMalformedOutput, "answer must be a JSON object");
  if (!json.contains("index")) fail(ErrorCode::kMalformedOutput, "answer lacks \"index\"");
  if (!json.contains("action") || !json.at("action").is_string()) {
    fail(ErrorCode::kMalformedOutput, "answer lacks a string \"action\"");
  }
  ActionChoice choice;
  choice.index = whole_number(json.at("index"), "index");
  if (choice.index < 0 || choice.index >= static_cast<int>(ranked.items.size())) {
    fail(ErrorCode::kIndexOutOfRange, "index " + std::to_string(choice.index) + " is not in the list 0.." +
                                          std::to_string(static_cast<int>(ranked.items.size()) - 1));
  }
  choice.action = parse_action_type(json.at("action").get<std::string>());

  const bool has_input = json.contains("input") && !json.at("input").is_null();
  switch (choice.action) {
    case ActionType::kClick:
      break;
    case ActionType::kType:
      if (!has_input) fail(ErrorCode::kInvalidActionInput, "type needs an \"input\" text");
      if (json.at("input").is_string()) {
        choice.input = json.at("input").get<std::string>();
      } else if (json.at("input").is_number()) {
        choice.input = json.at("input").dump();
      } else {
        fail(ErrorCode::kInvalidActionInput, "type input must be text");
      }
      break;
    case ActionType::kSelect:
      if (!has_input) fail(ErrorCode::kInvalidActionInput, "select needs an \"input\" option index");
      try {
        choice.input = whole_number(json.at("input"), "input");
      } catch (const Error&) {
        fail(ErrorCode::kInvalidActionInput, "select input must be an option index");
      }
      break;
  }
  validate_action(ground(choice, ranked), ranked.items.at(static_cast<std::size_t>(choice.index)));
  return choice;
}

ActionChoice select_action(const DecisionInput& input, LlmGateway& gateway, double temperature) {
  if (input.ranked == nullptr || input.ranked->items.empty()) {
    fail(ErrorCode::kPreconditionViolated, "no choices to decide between");
  }
  if (input.next_step.is_done()) fail(ErrorCode::kPreconditionViolated, "no decision is needed after Done");
  if (input.annotated == nullptr) fail(ErrorCode::kPreconditionViolated, "decision needs the annotated screenshot");

  const auto& prompt = prompt_template("select_action");
  std::map<std::string, std::string> values = {{"task", input.task},
                                               {"next_step", input.next_step.sentence()},
                                               {"history", format_history(input.history)},
                                               {"elements", element_listing(*input.ranked)}};
  if (input.context) values["context"] = input.context->context;

  CompletionRequest request;
  request.tier = ModelTier::kStrong;
  request.system_prompt = prompt.system;
  request.user_parts = {prompt.render_user(values), ImagePart{input.annotated->png, "image/png"}};
  request.temperature = temperature;
  request.expected_shape = ExpectedShape::kJsonObject;

  for (int attempt = 0;; ++attempt) {
    auto response = gateway.complete(request);
    try {
      return parse_action_choice(*response.parsed_json, *input.ranked);
    } catch (const Error& e) {
      const auto code = e.code();
      const bool correctable = code == ErrorCode::kMalformedOutput || code == ErrorCode::kIndexOutOfRange ||
                               code == ErrorCode::kIllegalActionType || code == ErrorCode::kInvalidActionInput;
      if (!correctable || attempt >= 1) throw;
      request.user_parts.push_back("Your previous answer " + response.parsed_json->dump() +
                                   " was rejected: " + e.what() + ". Answer again with a valid choice.");
    }
  }
}

Action ground(const ActionChoice& choice, const RankedChoices& ranked) {
  if (choice.index < 0 || choice.index >= static_cast<int>(ranked.items.size())) {
    fail(ErrorCode::kIndexOutOfRange, "index " + std::to_string(choice.index));
  }
  const auto& element = ranked.items[static_cast<std::size_t>(choice.index)];
  Action action;
  action.element_xpath = element.xpath;
  action.element_outer_html = element.outer_html;
  action.action_type = choice.action;
  action.input = choice.input;
  return action;
}

}  // namespace funcnav
