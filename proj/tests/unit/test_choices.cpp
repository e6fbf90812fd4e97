#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "funcnav/choices.hpp"
#include "funcnav/error.hpp"
#include "funcnav/util.hpp"
#include "oracles/oracles.hpp"
#include "support/support.hpp"

using namespace funcnav;
using testing_support::element;
using testing_support::LambdaProvider;

namespace {

Json corpus() { return Json::parse(util::read_file(testing_support::source_dir() / "tests/data/preprocess_corpus.json")); }

// Answers every description batch with "desc <ordinal>" for each element it lists.
std::string describe_all(const CompletionRequest& request, int) {
  const auto text = testing_support::user_text(request);
  const auto listing = Json::parse(text.substr(text.find('{'), text.rfind('}') - text.find('{') + 1));
  Json out = Json::object();
  for (const auto& [key, value] : listing.items()) out[key] = "desc " + key;
  return out.dump();
}

RankedChoices ranked_of(int n) {
  RankedChoices ranked;
  ranked.next_step = NextStep::step("do it");
  for (int i = 0; i < n; ++i) {
    auto e = element("/html/body/a[" + std::to_string(i + 1) + "]", "a", "Item " + std::to_string(i));
    e.ordinal = i;
    ranked.items.push_back(e);
  }
  return ranked;
}

}  // namespace

TEST(Preprocess, CorpusIsBitExact) {
  for (const auto& item : corpus()) {
    const auto input = item.at("input").get<std::string>();
    const int limit = item.at("limit").get<int>();
    EXPECT_EQ(preprocess_html(input, limit), item.at("expected").get<std::string>()) << item.at("name");
  }
}

TEST(Preprocess, IdempotentOnCorpus) {
  for (const auto& item : corpus()) {
    const int limit = item.at("limit").get<int>();
    const auto once = preprocess_html(item.at("input").get<std::string>(), limit);
    EXPECT_EQ(preprocess_html(once, limit), once) << item.at("name");
  }
}

TEST(Preprocess, NeverExceedsLimitInCodePoints) {
  std::mt19937 rng(3);
  for (int i = 0; i < 100; ++i) {
    std::string html = "<div data-x=\"1\" style=\"a\">";
    for (int w = 0; w < 20; ++w) html += testing_support::random_sentence(rng) + " é ";
    html += "</div>";
    const int limit = 1 + static_cast<int>(rng() % 120);
    EXPECT_LE(util::utf8_length(preprocess_html(html, limit)), static_cast<std::size_t>(limit));
  }
}

TEST(Choices, ActionableRules) {
  EXPECT_TRUE(is_actionable("a", "", false, false));
  EXPECT_TRUE(is_actionable("button", "", false, false));
  EXPECT_TRUE(is_actionable("select", "", false, false));
  EXPECT_TRUE(is_actionable("textarea", "", false, false));
  EXPECT_TRUE(is_actionable("input", "text", false, false));
  EXPECT_FALSE(is_actionable("input", "hidden", false, false));
  EXPECT_FALSE(is_actionable("input", "HIDDEN", true, true));
  EXPECT_FALSE(is_actionable("div", "", false, false));
  EXPECT_TRUE(is_actionable("div", "", true, false));
  EXPECT_TRUE(is_actionable("span", "", false, true));
}

TEST(Choices, TextInputRules) {
  EXPECT_TRUE(accepts_text_input("input", "", false));
  EXPECT_TRUE(accepts_text_input("input", "search", false));
  EXPECT_TRUE(accepts_text_input("input", "Email", false));
  EXPECT_FALSE(accepts_text_input("input", "checkbox", false));
  EXPECT_FALSE(accepts_text_input("input", "submit", false));
  EXPECT_TRUE(accepts_text_input("textarea", "", false));
  EXPECT_TRUE(accepts_text_input("div", "", true));
  EXPECT_FALSE(accepts_text_input("button", "", false));
}

TEST(Choices, ExtractCleansAndCounts) {
  PageState page;
  auto e = element("/a[1]", "a", "Men");
  e.outer_html = "<a data-label=\"m\" href=\"/men\">Men</a>";
  page.elements = {e};
  NavConfig config;
  auto out = extract_choices(page, {{"/a[1]", 2}}, config);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].cleaned_html, "<a href=\"/men\">Men</a>");
  EXPECT_EQ(out[0].previously_selected_count, 2);
}

TEST(Scoring, RejectsDone) {
  OfflineEmbedder embedder;
  EXPECT_THROW(score_choices({element("/a", "a", "x")}, NextStep::done(), {}, embedder, NavConfig{}), Error);
}

TEST(Scoring, MatchesOracleOnRandomSets) {
  OfflineEmbedder embedder;
  std::mt19937 rng(11);
  NavConfig config;
  for (int round = 0; round < 50; ++round) {
    const int n = 1 + static_cast<int>(rng() % 80);
    std::vector<ActionableElement> elements;
    std::vector<oracle::RankInput> inputs;
    SelectionCounts counts;
    for (int i = 0; i < n; ++i) {
      auto e = element("/x[" + std::to_string(i + 1) + "]", "a", rng() % 5 == 0 ? "" : testing_support::random_sentence(rng));
      e.cleaned_html = "<a>" + testing_support::random_sentence(rng) + "</a>";
      if (rng() % 4 == 0) counts[e.xpath] = 1 + static_cast<int>(rng() % 3);
      inputs.push_back({e.inner_text.empty() ? e.cleaned_html : e.inner_text, counts.count(e.xpath) ? counts[e.xpath] : 0});
      elements.push_back(e);
    }
    const auto step = testing_support::random_sentence(rng);
    config.top_k = 1 + static_cast<int>(rng() % 50);
    const auto ranked = score_choices(elements, NextStep::step(step), counts, embedder, config);
    const auto expected = oracle::rank(inputs, step, static_cast<std::size_t>(config.top_k), 0.5);
    ASSERT_EQ(ranked.items.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      EXPECT_EQ(ranked.items[i].xpath, elements[expected[i].index].xpath);
      EXPECT_EQ(ranked.items[i].score, expected[i].score);
      EXPECT_EQ(ranked.items[i].ordinal, static_cast<int>(i));
    }
  }
}

TEST(Scoring, PenaltyHalvesOnceRegardlessOfCount) {
  OfflineEmbedder embedder;
  const auto a = element("/a[1]", "a", "add to wishlist");
  const auto b = element("/a[2]", "a", "add to wishlist");
  const auto c = element("/a[3]", "a", "add to wishlist");
  const auto ranked = score_choices({a, b, c}, NextStep::step("add to wishlist"), {{"/a[1]", 1}, {"/a[3]", 4}},
                                    embedder, NavConfig{});
  ASSERT_EQ(ranked.items.size(), 3u);
  EXPECT_EQ(ranked.items[0].xpath, "/a[2]");
  EXPECT_NEAR(ranked.items[0].score, 1.0, 1e-12);
  EXPECT_EQ(ranked.items[1].xpath, "/a[1]");
  EXPECT_NEAR(ranked.items[1].score, 0.5, 1e-12);
  EXPECT_EQ(ranked.items[2].xpath, "/a[3]");
  EXPECT_NEAR(ranked.items[2].score, 0.5, 1e-12);
  EXPECT_EQ(ranked.items[2].previously_selected_count, 4);
}

TEST(Scoring, KeyFallsBackToCleanedHtml) {
  OfflineEmbedder embedder;
  auto icon = element("/button[1]", "button", "");
  icon.cleaned_html = "search";
  auto other = element("/a[1]", "a", "cart");
  const auto ranked = score_choices({other, icon}, NextStep::step("search"), {}, embedder, NavConfig{});
  EXPECT_EQ(ranked.items[0].xpath, "/button[1]");
  EXPECT_NEAR(ranked.items[0].score, 1.0, 1e-12);
}

TEST(Scoring, TopKAndEmpty) {
  OfflineEmbedder embedder;
  NavConfig config;
  config.top_k = 3;
  std::vector<ActionableElement> many;
  for (int i = 0; i < 10; ++i) many.push_back(element("/a[" + std::to_string(i + 1) + "]", "a", "x"));
  EXPECT_EQ(score_choices(many, NextStep::step("x"), {}, embedder, config).items.size(), 3u);
  EXPECT_TRUE(score_choices({}, NextStep::step("x"), {}, embedder, config).items.empty());
}

TEST(Neighbors, NearestWithinThresholdExcludingSelfAndDescendants) {
  PageState page;
  auto e = element("/html/body/div[1]/a[1]", "a", "Link", {100, 100, 20, 20});
  page.text_blocks = {
      {"/html/body/div[1]/a[1]", "Link", {100, 100, 20, 20}},
      {"/html/body/div[1]/a[1]/span[1]", "inner", {100, 100, 5, 5}},
      {"/html/body/p[1]", "far", {1000, 1000, 10, 10}},
      {"/html/body/p[2]", "near", {130, 100, 20, 20}},
      {"/html/body/p[3]", "nearer", {110, 120, 0, 0}},
      {"/html/body/p[4]", "", {100, 90, 20, 20}},
      {"/html/body/p[5]", "second", {100, 130, 20, 20}},
      {"/html/body/div[1]/a[10]", "sibling", {100, 70, 20, 20}},
  };
  auto out = attach_neighbors(e, page, 5, 300);
  EXPECT_EQ(out.neighbour_texts, (std::vector<std::string>{"near", "second", "sibling"}));
  out = attach_neighbors(e, page, 2, 300);
  EXPECT_EQ(out.neighbour_texts, (std::vector<std::string>{"near", "second"}));
  out = attach_neighbors(e, page, 5, 10);
  EXPECT_TRUE(out.neighbour_texts.empty());
}

TEST(Neighbors, MatchesDistanceOracle) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> coord(0, 800);
  std::uniform_real_distribution<double> size(1, 60);
  for (int round = 0; round < 100; ++round) {
    PageState page;
    std::vector<oracle::Box> boxes;
    const int n = static_cast<int>(rng() % 30);
    for (int i = 0; i < n; ++i) {
      BBox b{coord(rng), coord(rng), size(rng), size(rng)};
      page.text_blocks.push_back({"/p[" + std::to_string(i + 1) + "]", "t" + std::to_string(i), b});
      boxes.push_back({b.x, b.y, b.width, b.height});
    }
    BBox target{coord(rng), coord(rng), size(rng), size(rng)};
    const double threshold = 50 + coord(rng) / 2;
    auto out = attach_neighbors(element("/a[1]", "a", "x", target), page, 5, threshold);
    const auto expected = oracle::nearest({target.x, target.y, target.width, target.height}, boxes, 5, threshold);
    ASSERT_EQ(out.neighbour_texts.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(out.neighbour_texts[i], "t" + std::to_string(expected[i]));
  }
}

TEST(Neighbors, SelectOptionsAppended) {
  auto e = element("/select[1]", "select", "", {0, 0, 10, 10});
  e.cleaned_html = "<select name=\"size\"></select>";
  e.select_options = std::vector<std::string>{"S", "M"};
  auto out = attach_neighbors(e, PageState{}, 5, 300);
  EXPECT_EQ(out.cleaned_html, "<select name=\"size\"></select> options: [0] S; [1] M");
}

TEST(Descriptions, BatchesOfTen) {
  auto provider = std::make_shared<LambdaProvider>(describe_all);
  LlmGateway gateway(provider);
  NavConfig config;
  const auto out = describe_choices(ranked_of(23), gateway, config);
  const auto requests = provider->requests();
  ASSERT_EQ(requests.size(), 3u);
  std::vector<std::size_t> sizes;
  for (const auto& r : requests) {
    EXPECT_EQ(r.tier, ModelTier::kCheap);
    const auto text = testing_support::user_text(r);
    sizes.push_back(Json::parse(text.substr(text.find('{'), text.rfind('}') - text.find('{') + 1)).size());
  }
  EXPECT_EQ(sizes, (std::vector<std::size_t>{10, 10, 3}));
  for (const auto& item : out.items) EXPECT_EQ(item.description, "desc " + std::to_string(item.ordinal));
}

TEST(Descriptions, ConcurrentBatchesKeepOrder) {
  auto provider = std::make_shared<LambdaProvider>(describe_all);
  LlmGateway gateway(provider);
  NavConfig config;
  config.concurrent_description_batches = true;
  const auto out = describe_choices(ranked_of(35), gateway, config);
  EXPECT_EQ(provider->requests().size(), 4u);
  for (const auto& item : out.items) EXPECT_EQ(item.description, "desc " + std::to_string(item.ordinal));
}

TEST(Descriptions, DisabledMeansNoCallsAndFallbackTexts) {
  auto provider = std::make_shared<LambdaProvider>(describe_all);
  LlmGateway gateway(provider);
  NavConfig config;
  config.enable_descriptions = false;
  auto ranked = ranked_of(5);
  ranked.items[2].inner_text.clear();
  ranked.items[2].cleaned_html = std::string(250, 'h');
  const auto out = describe_choices(ranked, gateway, config);
  EXPECT_TRUE(provider->requests().empty());
  EXPECT_EQ(out.items[0].description, "Item 0");
  EXPECT_EQ(out.items[2].description, std::string(200, 'h'));
}

TEST(Descriptions, MalformedBatchFallsBack) {
  auto provider = std::make_shared<LambdaProvider>([](const CompletionRequest&, int) { return std::string("{\"0\": \"only one\"}"); });
  LlmGateway gateway(provider);
  const auto out = describe_choices(ranked_of(3), gateway, NavConfig{});
  EXPECT_EQ(out.items[0].description, "Item 0");
  EXPECT_EQ(out.items[2].description, "Item 2");
}

TEST(Choices, ListingJsonShape) {
  auto ranked = ranked_of(2);
  ranked.items[1].neighbour_texts = {"near"};
  const auto json = choices_listing_json(ranked.items);
  EXPECT_EQ(json.at("1").at("outerHTML"), ranked.items[1].cleaned_html);
  EXPECT_EQ(json.at("1").at("neighbours"), Json::array({"near"}));
}
