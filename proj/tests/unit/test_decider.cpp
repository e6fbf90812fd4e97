#include <gtest/gtest.h>

#include "funcnav/decider.hpp"
#include "funcnav/error.hpp"
#include "funcnav/image.hpp"
#include "support/support.hpp"

using namespace funcnav;
using testing_support::element;
using testing_support::LambdaProvider;

namespace {

RankedChoices sample_ranked() {
  RankedChoices ranked;
  ranked.next_step = NextStep::step("search for blazer");
  ranked.items = {element("/a[1]", "a", "Home", {10, 10, 40, 20}),
                  element("/input[1]", "input", "", {60, 10, 100, 20}),
                  element("/select[1]", "select", "", {10, 50, 60, 20})};
  ranked.items[2].select_options = std::vector<std::string>{"S", "M", "L"};
  for (int i = 0; i < 3; ++i) ranked.items[static_cast<std::size_t>(i)].ordinal = i;
  ranked.items[0].description = "Goes home";
  return ranked;
}

Screenshot blank(int w, int h) {
  Raster raster(w, h, {255, 255, 255, 255});
  return {raster.encode_png(), w, h};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(Decider, ParseValidChoices) {
  const auto ranked = sample_ranked();
  auto c = parse_action_choice(Json{{"index", 0}, {"action", "click"}}, ranked);
  EXPECT_EQ(c.index, 0);
  EXPECT_EQ(c.action, ActionType::kClick);
  c = parse_action_choice(Json{{"index", "1"}, {"action", "Type"}, {"input", "Blazer"}}, ranked);
  EXPECT_EQ(c.input, ActionInput(std::string("Blazer")));
  c = parse_action_choice(Json{{"index", 2.0}, {"action", "select"}, {"input", "2"}}, ranked);
  EXPECT_EQ(c.input, ActionInput(2));
  c = parse_action_choice(Json{{"index", 1}, {"action", "type"}, {"input", 42}}, ranked);
  EXPECT_EQ(c.input, ActionInput(std::string("42")));
}

TEST(Decider, ParseRejections) {
  const auto ranked = sample_ranked();
  EXPECT_EQ(code_of([&] { parse_action_choice(Json::array(), ranked); }), ErrorCode::kMalformedOutput);
  EXPECT_EQ(code_of([&] { parse_action_choice(Json{{"action", "click"}}, ranked); }), ErrorCode::kMalformedOutput);
  EXPECT_EQ(code_of([&] { parse_action_choice(Json{{"index", 0}}, ranked); }), ErrorCode::kMalformedOutput);
  EXPECT_EQ(code_of([&] { parse_action_choice(Json{{"index", 1.5}, {"action", "click"}}, ranked); }),
            ErrorCode::kMalformedOutput);
  EXPECT_EQ(code_of([&] { parse_action_choice(Json{{"index", 3}, {"action", "click"}}, ranked); }),
            ErrorCode::kIndexOutOfRange);
  EXPECT_EQ(code_of([&] { parse_action_choice(Json{{"index", -1}, {"action", "click"}}, ranked); }),
            ErrorCode::kIndexOutOfRange);
  EXPECT_EQ(code_of([&] { parse_action_choice(Json{{"index", 0}, {"action", "hover"}}, ranked); }),
            ErrorCode::kIllegalActionType);
  EXPECT_EQ(code_of([&] { parse_action_choice(Json{{"index", 0}, {"action", "type"}, {"input", "x"}}, ranked); }),
            ErrorCode::kIllegalActionType);
  EXPECT_EQ(code_of([&] { parse_action_choice(Json{{"index", 1}, {"action", "type"}}, ranked); }),
            ErrorCode::kInvalidActionInput);
  EXPECT_EQ(code_of([&] { parse_action_choice(Json{{"index", 2}, {"action", "select"}, {"input", "L"}}, ranked); }),
            ErrorCode::kInvalidActionInput);
  EXPECT_EQ(code_of([&] { parse_action_choice(Json{{"index", 2}, {"action", "select"}, {"input", 3}}, ranked); }),
            ErrorCode::kInvalidActionInput);
}

TEST(Decider, GroundUsesTheIndexedElement) {
  const auto ranked = sample_ranked();
  const auto action = ground({1, ActionType::kType, std::string("Blazer")}, ranked);
  EXPECT_EQ(action.element_xpath, "/input[1]");
  EXPECT_EQ(action.element_outer_html, ranked.items[1].outer_html);
  ASSERT_NE(action.text(), nullptr);
  EXPECT_EQ(*action.text(), "Blazer");
  EXPECT_EQ(code_of([&] { ground({5, ActionType::kClick, {}}, ranked); }), ErrorCode::kIndexOutOfRange);
}

TEST(Decider, ListingIncludesTagsDescriptionsAndOptions) {
  const auto text = element_listing(sample_ranked());
  EXPECT_NE(text.find("0: <a> Goes home"), std::string::npos);
  EXPECT_NE(text.find("2: <select>"), std::string::npos);
  EXPECT_NE(text.find("(options: 0 = S; 1 = M; 2 = L)"), std::string::npos);
}

TEST(Decider, OneCorrectiveReprompt) {
  const auto ranked = sample_ranked();
  const auto shot = blank(200, 100);
  DecisionInput input{"task", ranked.next_step, std::nullopt, {}, &ranked, &shot};

  auto provider = std::make_shared<LambdaProvider>([](const CompletionRequest&, int call) {
    return call == 0 ? std::string(R"({"index": 9, "action": "click"})") : std::string(R"({"index": 0, "action": "click"})");
  });
  LlmGateway gateway(provider);
  const auto choice = select_action(input, gateway);
  EXPECT_EQ(choice.index, 0);
  const auto requests = provider->requests();
  ASSERT_EQ(requests.size(), 2u);
  EXPECT_EQ(requests[0].user_parts.size(), 2u);
  ASSERT_EQ(requests[1].user_parts.size(), 3u);
  const auto& note = std::get<std::string>(requests[1].user_parts[2]);
  EXPECT_NE(note.find("rejected"), std::string::npos);
  EXPECT_NE(note.find("index 9"), std::string::npos);
  EXPECT_TRUE(std::holds_alternative<ImagePart>(requests[0].user_parts[1]));
}

TEST(Decider, SecondInvalidAnswerIsRethrown) {
  const auto ranked = sample_ranked();
  const auto shot = blank(200, 100);
  DecisionInput input{"task", ranked.next_step, std::nullopt, {}, &ranked, &shot};
  auto provider = std::make_shared<LambdaProvider>(
      [](const CompletionRequest&, int) { return std::string(R"({"index": 0, "action": "drag"})"); });
  LlmGateway gateway(provider);
  EXPECT_EQ(code_of([&] { select_action(input, gateway); }), ErrorCode::kIllegalActionType);
  EXPECT_EQ(provider->requests().size(), 2u);
}

TEST(Decider, PreconditionsChecked) {
  const auto ranked = sample_ranked();
  const auto shot = blank(20, 20);
  auto provider = std::make_shared<LambdaProvider>([](const CompletionRequest&, int) { return std::string("{}"); });
  LlmGateway gateway(provider);
  RankedChoices empty;
  DecisionInput no_choices{"t", NextStep::step("x"), std::nullopt, {}, &empty, &shot};
  EXPECT_EQ(code_of([&] { select_action(no_choices, gateway); }), ErrorCode::kPreconditionViolated);
  DecisionInput done{"t", NextStep::done(), std::nullopt, {}, &ranked, &shot};
  EXPECT_EQ(code_of([&] { select_action(done, gateway); }), ErrorCode::kPreconditionViolated);
  EXPECT_TRUE(provider->requests().empty());
}

TEST(Annotation, BadgesForOnScreenElementsOnly) {
  auto ranked = sample_ranked();
  ranked.items.push_back(element("/a[9]", "a", "off", {500, 500, 10, 10}));
  ranked.items.back().ordinal = 3;
  ranked.items.push_back(element("/a[10]", "a", "edge", {195, 95, 30, 30}));
  ranked.items.back().ordinal = 4;
  const auto shot = blank(200, 100);
  const auto annotation = annotate_screenshot(shot, ranked);
  EXPECT_EQ(annotation.image.width, 200);
  EXPECT_EQ(annotation.image.height, 100);
  ASSERT_EQ(annotation.badges.size(), 4u);
  EXPECT_EQ(annotation.badges[3].ordinal, 4);
  for (const auto& badge : annotation.badges) {
    EXPECT_GE(badge.x, 0);
    EXPECT_GE(badge.y, 0);
    EXPECT_LE(badge.x + badge.width, 200);
    EXPECT_LE(badge.y + badge.height, 100);
  }
  const auto raster = Raster::decode_png(annotation.image.png);
  EXPECT_EQ(raster.pixel(49, 20), (Rgba{230, 25, 75, 255}));  // right outline of ordinal 0
  EXPECT_EQ(raster.pixel(100, 80), (Rgba{255, 255, 255, 255}));
  const auto manifest = annotation.manifest();
  EXPECT_EQ(manifest.at("badges").size(), 4u);
  EXPECT_EQ(manifest.at("width"), 200);
}

TEST(Annotation, EmptyListLeavesBytesUntouched) {
  const auto shot = blank(30, 30);
  const auto annotation = annotate_screenshot(shot, RankedChoices{});
  EXPECT_EQ(annotation.image.png, shot.png);
  EXPECT_TRUE(annotation.badges.empty());
}

TEST(Annotation, CorruptImage) {
  Screenshot bad{{1, 2, 3}, 10, 10};
  EXPECT_EQ(code_of([&] { annotate_screenshot(bad, sample_ranked()); }), ErrorCode::kImageDecodeFailed);
}
