#include <gtest/gtest.h>

#include <httplib.h>

#include <mutex>
#include <thread>

#include "funcnav/browser.hpp"
#include "funcnav/error.hpp"
#include "funcnav/image.hpp"
#include "funcnav/util.hpp"
#include "support/support.hpp"

using namespace funcnav;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kInvalidArgument;
}

std::unique_ptr<Session> mini_shop() {
  BrowserConfig config;
  config.fixture_dir = testing_support::fixture_apps();
  return open_session(config, "https://mini-shop.test/", "mini_shop");
}

const ActionableElement* by_xpath(const PageState& page, const std::string& xpath) {
  for (const auto& e : page.elements) {
    if (e.xpath == xpath) return &e;
  }
  return nullptr;
}

Action click(const std::string& xpath) { return {xpath, "", ActionType::kClick, {}}; }

}  // namespace

TEST(FixtureBackend, CapturesLandingState) {
  auto session = mini_shop();
  EXPECT_EQ(session->backend(), BackendKind::kFixture);
  EXPECT_EQ(session->fixture_state(), "landing");
  EXPECT_EQ(session->session_id().rfind("fixture-", 0), 0u);
  const auto page = session->capture_state(0);
  EXPECT_EQ(page.url, "https://mini-shop.test/");
  EXPECT_EQ(page.meta_description, "Mini Shop sells clothing and accessories for women, men and kids.");
  EXPECT_EQ(page.screenshot.width, 800);
  EXPECT_EQ(page.screenshot.height, 600);
  EXPECT_EQ(page.elements.size(), 9u);  // hidden input, heading and paragraph excluded
  const auto* toggle = by_xpath(page, "/html/body/div[1]/button[1]");
  ASSERT_NE(toggle, nullptr);
  EXPECT_EQ(toggle->bbox, (BBox{600, 20, 40, 30}));
  const auto* next = by_xpath(page, "/html/body/div[1]/div[1]");
  ASSERT_NE(next, nullptr);
  EXPECT_TRUE(next->has_listener);
  EXPECT_EQ(by_xpath(page, "/html/body/div[1]/input[1]"), nullptr);
  bool heading_text = false;
  for (const auto& block : page.text_blocks) heading_text |= block.text == "New season arrivals";
  EXPECT_TRUE(heading_text);
}

TEST(FixtureBackend, SelectOptionsAndTextInputs) {
  auto session = mini_shop();
  session->execute(click("/html/body/div[1]/button[1]"));
  auto page = session->capture_state(1);
  const auto* input = by_xpath(page, "/html/body/div[1]/input[1]");
  ASSERT_NE(input, nullptr);
  EXPECT_TRUE(input->accepts_text);
  session->execute({"/html/body/div[1]/input[1]", "", ActionType::kType, std::string("Blazer")});
  page = session->capture_state(2);
  const auto* select = by_xpath(page, "/html/body/div[1]/select[1]");
  ASSERT_NE(select, nullptr);
  EXPECT_EQ(select->select_options, (std::vector<std::string>{"S", "M", "L", "XL"}));
}

TEST(FixtureBackend, TransitionsFollowTheTable) {
  auto session = mini_shop();
  auto report = session->execute(click("/html/body/div[1]/button[1]"));
  EXPECT_TRUE(report.navigated);
  EXPECT_EQ(session->fixture_state(), "search");
  EXPECT_EQ(code_of([&] {
              session->execute({"/html/body/div[1]/input[1]", "", ActionType::kType, std::string("shoes")});
            }),
            ErrorCode::kNoMatchingTransition);
  session->execute({"/html/body/div[1]/input[1]", "", ActionType::kType, std::string("BLAZERS")});
  EXPECT_EQ(session->fixture_state(), "results");
  EXPECT_EQ(code_of([&] { session->execute({"/html/body/div[1]/select[1]", "", ActionType::kSelect, 4}); }),
            ErrorCode::kActionRejected);
  EXPECT_EQ(code_of([&] { session->execute({"/html/body/div[1]/a[2]", "", ActionType::kSelect, 0}); }),
            ErrorCode::kActionRejected);
  EXPECT_EQ(code_of([&] { session->execute({"/html/body/div[1]/select[1]", "", ActionType::kSelect, 1}); }),
            ErrorCode::kNoMatchingTransition);
  EXPECT_EQ(code_of([&] { session->execute(click("/html/body/div[9]")); }), ErrorCode::kElementNotFound);
  EXPECT_EQ(code_of([&] { session->execute({"/html/body/div[1]/a[2]", "", ActionType::kClick, std::string("x")}); }),
            ErrorCode::kInvalidActionInput);
  session->close();
  EXPECT_FALSE(session->is_open());
  EXPECT_EQ(code_of([&] { session->capture_state(0); }), ErrorCode::kSessionClosed);
}

TEST(FixtureBackend, UnknownAppAndBadContents) {
  BrowserConfig config;
  config.fixture_dir = testing_support::fixture_apps();
  EXPECT_EQ(code_of([&] { open_session(config, "", "no_such_app"); }), ErrorCode::kUnknownFixtureApp);

  testing_support::TempDir dir;
  std::filesystem::create_directories(dir / "broken");
  util::write_file_atomic(dir / "broken/transitions.json",
                          R"({"app": "broken", "initial_state": "x", "states": [], "transitions": []})");
  config.fixture_dir = dir.path();
  EXPECT_EQ(code_of([&] { open_session(config, "", "broken"); }), ErrorCode::kInvalidSpec);
}

TEST(FixtureBackend, MetaDescriptionExtraction) {
  EXPECT_EQ(extract_meta_description("<html><head><meta name=\"Description\" content=\"A &amp; B\"></head></html>"),
            "A & B");
  EXPECT_EQ(extract_meta_description("<html><head><title>x</title></head></html>"), "");
}

TEST(FixtureBackend, SessionIdsAreUnique) {
  auto a = mini_shop();
  auto b = mini_shop();
  EXPECT_NE(a->session_id(), b->session_id());
}

TEST(WireCapture, ParsesAndFiltersElements) {
  const Json capture = {
      {"url", "https://x.test/"},
      {"meta_description", "desc"},
      {"elements",
       Json::array({
           {{"tag", "A"}, {"outer_html", "<a>Go</a>"}, {"inner_text", " Go \n now"}, {"xpath", "/html/body/a[1]"},
            {"bbox", {1, 2, 3, 4}}},
           {{"tag", "input"}, {"type", "hidden"}, {"xpath", "/html/body/input[1]"}, {"bbox", {0, 0, 1, 1}}},
           {{"tag", "div"}, {"xpath", "/html/body/div[1]"}, {"bbox", {0, 0, 1, 1}}},
           {{"tag", "div"}, {"listener", true}, {"xpath", "/html/body/div[2]"}, {"bbox", {0, 0, 1, 1}}},
           {{"tag", "span"}, {"contenteditable", true}, {"inline_handler", true}, {"xpath", "/html/body/span[1]"},
            {"bbox", {0, 0, 1, 1}}},
           {{"tag", "select"}, {"xpath", "/html/body/select[1]"}, {"bbox", {0, 0, 1, 1}}, {"options", {"a", "b"}}},
       })},
      {"texts", Json::array({{{"xpath", "/html/body/p[1]"}, {"text", "hello  world"}, {"bbox", {5, 5, 5, 5}}}})}};
  const auto page = parse_wire_capture(capture.dump(), 3);
  EXPECT_EQ(page.step_index, 3);
  ASSERT_EQ(page.elements.size(), 4u);
  EXPECT_EQ(page.elements[0].tag_name, "a");
  EXPECT_EQ(page.elements[0].inner_text, "Go now");
  EXPECT_EQ(page.elements[0].bbox, (BBox{1, 2, 3, 4}));
  EXPECT_TRUE(page.elements[1].has_listener);
  EXPECT_TRUE(page.elements[2].accepts_text);
  EXPECT_EQ(page.elements[3].select_options, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(page.text_blocks.size(), 1u);
  EXPECT_EQ(page.text_blocks[0].text, "hello world");
  EXPECT_EQ(code_of([] { parse_wire_capture("[]", 0); }), ErrorCode::kPageUnavailable);
}

namespace {

// Minimal in-process W3C WebDriver: one page with a link that navigates and
// a select with two options.
class FakeWebDriver {
 public:
  FakeWebDriver() {
    auto reply = [](httplib::Response& res, const Json& value, int status = 200) {
      res.status = status;
      res.set_content(Json{{"value", value}}.dump(), "application/json");
    };
    const std::string key = "element-6066-11e4-a52e-4f735466cecf";
    server_.Post("/session", [=, this](const httplib::Request&, httplib::Response& res) {
      log("new session");
      reply(res, {{"sessionId", "abc"}, {"capabilities", Json::object()}});
    });
    server_.Post("/session/abc/timeouts", [=, this](const httplib::Request& req, httplib::Response& res) {
      log("timeouts " + Json::parse(req.body).at("script").dump());
      reply(res, nullptr);
    });
    server_.Post("/session/abc/url", [=, this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      url_ = Json::parse(req.body).at("url").get<std::string>();
      calls_.push_back("navigate " + url_);
      reply(res, nullptr);
    });
    server_.Get("/session/abc/url", [=, this](const httplib::Request&, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      reply(res, url_);
    });
    server_.Post("/session/abc/execute/sync", [=, this](const httplib::Request& req, httplib::Response& res) {
      const auto script = Json::parse(req.body).at("script").get<std::string>();
      if (script.find("__funcnavListeners = new WeakSet") != std::string::npos) {
        log("probe");
        reply(res, nullptr);
        return;
      }
      log("capture");
      std::lock_guard lock(mutex_);
      Json page = {{"url", url_},
                   {"meta_description", "fake"},
                   {"elements",
                    Json::array({{{"tag", "a"}, {"outer_html", "<a href=\"/next\">Next</a>"}, {"inner_text", "Next"},
                                  {"xpath", "/html/body/a[1]"}, {"bbox", {10, 10, 50, 20}}},
                                 {{"tag", "select"}, {"outer_html", "<select></select>"}, {"inner_text", ""},
                                  {"xpath", "/html/body/select[1]"}, {"bbox", {10, 40, 50, 20}},
                                  {"options", {"one", "two"}}},
                                 {{"tag", "input"}, {"type", "text"}, {"outer_html", "<input>"},
                                  {"xpath", "/html/body/input[1]"}, {"bbox", {10, 70, 50, 20}}}})},
                   {"texts", Json::array()}};
      reply(res, page);
    });
    server_.Post("/session/abc/execute/async", [=, this](const httplib::Request&, httplib::Response& res) {
      log("settle");
      reply(res, nullptr);
    });
    server_.Get("/session/abc/screenshot", [=](const httplib::Request&, httplib::Response& res) {
      Raster raster(32, 16);
      reply(res, util::base64_encode(raster.encode_png()));
    });
    server_.Post("/session/abc/element", [=, this](const httplib::Request& req, httplib::Response& res) {
      const auto xpath = Json::parse(req.body).at("value").get<std::string>();
      log("find " + xpath);
      if (xpath == "/html/body/a[1]") return reply(res, {{key, "link"}});
      if (xpath == "/html/body/select[1]") return reply(res, {{key, "sel"}});
      if (xpath == "/html/body/input[1]") return reply(res, {{key, "inp"}});
      reply(res, {{"error", "no such element"}, {"message", "nothing at " + xpath}}, 404);
    });
    server_.Post("/session/abc/element/sel/elements", [=](const httplib::Request&, httplib::Response& res) {
      reply(res, Json::array({{{key, "opt0"}}, {{key, "opt1"}}}));
    });
    server_.Post(R"(/session/abc/element/(\w+)/(click|clear|value))",
                 [=, this](const httplib::Request& req, httplib::Response& res) {
                   const std::string id = req.matches[1];
                   const std::string verb = req.matches[2];
                   log(verb + " " + id + (verb == "value" ? " " + Json::parse(req.body).at("text").get<std::string>() : ""));
                   if (id == "link" && verb == "click") {
                     std::lock_guard lock(mutex_);
                     url_ = "https://fake.test/next";
                   }
                   reply(res, nullptr);
                 });
    server_.Delete("/session/abc", [=, this](const httplib::Request&, httplib::Response& res) {
      log("delete");
      reply(res, nullptr);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeWebDriver() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::vector<std::string> calls() {
    std::lock_guard lock(mutex_);
    return calls_;
  }

 private:
  void log(const std::string& entry) {
    std::lock_guard lock(mutex_);
    calls_.push_back(entry);
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mutex_;
  std::string url_;
  std::vector<std::string> calls_;
};

}  // namespace

TEST(WireBackend, FullSessionAgainstFakeDriver) {
  FakeWebDriver driver;
  BrowserConfig config;
  config.backend = BackendKind::kWire;
  config.wire_endpoint = driver.endpoint();
  auto session = open_session(config, "https://fake.test/", "");
  EXPECT_EQ(session->session_id(), "abc");
  EXPECT_EQ(session->backend(), BackendKind::kWire);
  EXPECT_EQ(session->current_url(), "https://fake.test/");
  EXPECT_FALSE(session->fixture_state().has_value());

  const auto page = session->capture_state(0);
  EXPECT_EQ(page.url, "https://fake.test/");
  EXPECT_EQ(page.elements.size(), 3u);
  EXPECT_EQ(page.screenshot.width, 32);
  EXPECT_EQ(page.screenshot.height, 16);

  auto report = session->execute({"/html/body/select[1]", "", ActionType::kSelect, 1});
  EXPECT_FALSE(report.navigated);
  report = session->execute({"/html/body/input[1]", "", ActionType::kType, std::string("hello")});
  EXPECT_FALSE(report.navigated);
  report = session->execute(click("/html/body/a[1]"));
  EXPECT_TRUE(report.navigated);
  EXPECT_EQ(report.new_url, "https://fake.test/next");

  EXPECT_EQ(code_of([&] { session->execute(click("/html/body/b[1]")); }), ErrorCode::kElementNotFound);
  EXPECT_EQ(code_of([&] { session->execute({"/html/body/select[1]", "", ActionType::kSelect, 5}); }),
            ErrorCode::kActionRejected);
  session->close();
  EXPECT_EQ(code_of([&] { session->capture_state(1); }), ErrorCode::kSessionClosed);

  const auto calls = driver.calls();
  auto position = [&](const std::string& entry) {
    return std::find(calls.begin(), calls.end(), entry) - calls.begin();
  };
  EXPECT_LT(position("new session"), position("timeouts 15000"));
  EXPECT_LT(position("timeouts 15000"), position("navigate https://fake.test/"));
  EXPECT_LT(position("navigate https://fake.test/"), position("probe"));
  EXPECT_LT(position("settle"), position("capture"));
  EXPECT_LT(position("clear inp"), position("value inp hello"));
  EXPECT_NE(std::find(calls.begin(), calls.end(), "click opt1"), calls.end());
  EXPECT_EQ(calls.back(), "delete");
}

TEST(WireBackend, UnreachableDriver) {
  BrowserConfig config;
  config.backend = BackendKind::kWire;
  config.wire_endpoint = "http://127.0.0.1:1";
  EXPECT_EQ(code_of([&] { open_session(config, "https://x.test/", ""); }), ErrorCode::kBackendUnreachable);
}

TEST(Backend, KindNames) {
  EXPECT_EQ(parse_backend_kind("wire"), BackendKind::kWire);
  EXPECT_EQ(parse_backend_kind("fixture"), BackendKind::kFixture);
  EXPECT_EQ(to_string(BackendKind::kWire), "wire");
  EXPECT_THROW(parse_backend_kind("selenium-grid"), Error);
}
