#include "funcnav/browser.hpp"

#include <atomic>
#include <functional>
#include <regex>

#include "funcnav/choices.hpp"
#include "funcnav/error.hpp"
#include "funcnav/html.hpp"
#include "funcnav/image.hpp"
#include "funcnav/serialization.hpp"
#include "funcnav/util.hpp"
#include "internal/http.hpp"

namespace funcnav {

std::string_view to_string(BackendKind kind) { return kind == BackendKind::kWire ? "wire" : "fixture"; }

BackendKind parse_backend_kind(std::string_view text) {
  auto lower = util::to_lower(text);
  if (lower == "wire") return BackendKind::kWire;
  if (lower == "fixture") return BackendKind::kFixture;
  fail(ErrorCode::kInvalidArgument, "unknown backend: " + std::string(text));
}

namespace {

std::atomic<int> g_session_counter{0};

std::string next_session_id(std::string_view prefix) {
  return std::string(prefix) + "-" + std::to_string(++g_session_counter);
}

bool has_inline_handler(const html::Node& node) {
  for (const auto& attr : node.attributes) {
    if (attr.name.size() > 2 && attr.name.rfind("on", 0) == 0) return true;
  }
  return false;
}

bool is_contenteditable(const html::Node& node) {
  const auto* value = node.attr("contenteditable");
  return value != nullptr && util::to_lower(*value) != "false";
}

bool inside_head(const html::Node& node) {
  for (const auto* p = node.parent; p != nullptr; p = p->parent) {
    if (p->tag == "head") return true;
  }
  return false;
}

std::vector<std::string> option_texts(const html::Node& select) {
  std::vector<std::string> out;
  std::function<void(const html::Node&)> walk = [&](const html::Node& node) {
    for (const auto& child : node.children) {
      if (child->is_text) continue;
      if (child->tag == "option") {
        out.push_back(html::Document::inner_text(*child));
      } else {
        walk(*child);
      }
    }
  };
  walk(select);
  return out;
}

Screenshot screenshot_from_png(std::vector<std::uint8_t> png) {
  auto dims = png_dimensions(png);
  if (!dims) fail(ErrorCode::kScreenshotFailed, "screenshot is not a PNG image");
  return Screenshot{std::move(png), dims->first, dims->second};
}

bool transition_input_matches(const FixtureTransition& transition, const Action& action) {
  if (transition.input_pattern.empty()) return true;
  std::string value;
  if (const auto* text = action.text()) value = *text;
  if (const auto* index = action.option_index()) value = std::to_string(*index);
  std::regex pattern(transition.input_pattern, std::regex::ECMAScript | std::regex::icase);
  return std::regex_match(value, pattern);
}

class FixtureSession final : public Session {
 public:
  FixtureSession(FixtureApp app, std::string start_url)
      : app_(std::move(app)), id_(next_session_id("fixture")), state_(app_.initial_state) {
    (void)start_url;
  }

  const std::string& session_id() const override { return id_; }
  BackendKind backend() const override { return BackendKind::kFixture; }
  std::string current_url() const override { return snapshot().url; }
  bool is_open() const override { return open_; }
  std::optional<std::string> fixture_state() const override { return state_; }

  PageState capture_state(int step_index) override {
    require_open();
    return capture_fixture_state(snapshot(), step_index);
  }

  ExecutionReport execute(const Action& action) override {
    require_open();
    check_action_input(action.action_type, action.input);
    const auto& current = snapshot();
    html::Document doc(current.html);
    const auto* node = doc.find_by_xpath(action.element_xpath);
    if (node == nullptr) fail(ErrorCode::kElementNotFound, action.element_xpath);
    if (action.action_type == ActionType::kSelect) {
      if (node->tag != "select") fail(ErrorCode::kActionRejected, "select on <" + node->tag + ">");
      auto options = option_texts(*node);
      if (*action.option_index() >= static_cast<int>(options.size())) {
        fail(ErrorCode::kActionRejected, "option index " + std::to_string(*action.option_index()) + " out of range");
      }
    }
    for (const auto& transition : current.transitions) {
      if (transition.xpath != action.element_xpath || transition.action != action.action_type) continue;
      if (!transition_input_matches(transition, action)) continue;
      const std::string old_url = current.url;
      state_ = transition.to;
      return ExecutionReport{snapshot().url != old_url, snapshot().url};
    }
    fail(ErrorCode::kNoMatchingTransition,
         std::string(to_string(action.action_type)) + " on " + action.element_xpath + " in state " + state_);
  }

  void close() override { open_ = false; }

 private:
  const FixtureSnapshot& snapshot() const { return app_.states.at(state_); }
  void require_open() const {
    if (!open_) fail(ErrorCode::kSessionClosed, "session " + id_ + " is closed");
  }

  FixtureApp app_;
  std::string id_;
  std::string state_;
  bool open_ = true;
};

// ---- WebDriver -------------------------------------------------------------

constexpr std::string_view kElementKey = "element-6066-11e4-a52e-4f735466cecf";

constexpr std::string_view kListenerProbeScript = R"JS(
if (!window.__funcnavListeners) {
  window.__funcnavListeners = new WeakSet();
  const original = EventTarget.prototype.addEventListener;
  EventTarget.prototype.addEventListener = function (type, handler, options) {
    if ((type === 'click' || type === 'input' || type === 'change') && this instanceof Element) {
      window.__funcnavListeners.add(this);
    }
    return original.call(this, type, handler, options);
  };
}
return true;
)JS";

constexpr std::string_view kQuiescenceScript = R"JS(
const done = arguments[arguments.length - 1];
const quiet = arguments[0];
const cap = arguments[1];
const start = Date.now();
let last = Date.now();
const observer = new MutationObserver(() => { last = Date.now(); });
observer.observe(document, {subtree: true, childList: true, attributes: true, characterData: true});
(function poll() {
  const now = Date.now();
  if ((document.readyState === 'complete' && now - last >= quiet) || now - start >= cap) {
    observer.disconnect();
    done(true);
    return;
  }
  setTimeout(poll, 50);
})();
)JS";

constexpr std::string_view kCaptureScript = R"JS(
const interactive = new Set(['a', 'button', 'input', 'select', 'textarea']);
const listeners = window.__funcnavListeners || new WeakSet();
function xpathOf(el) {
  if (el === document.documentElement) return '/html';
  if (el === document.body) return '/html/body';
  if (el === document.head) return '/html/head';
  let index = 1;
  for (let sib = el.previousElementSibling; sib; sib = sib.previousElementSibling) {
    if (sib.tagName === el.tagName) index++;
  }
  return xpathOf(el.parentElement) + '/' + el.tagName.toLowerCase() + '[' + index + ']';
}
function rendered(el) {
  const style = window.getComputedStyle(el);
  if (style.display === 'none' || style.visibility === 'hidden') return false;
  const r = el.getBoundingClientRect();
  return r.width > 0 && r.height > 0;
}
const elements = [];
const texts = [];
const all = document.body ? document.body.querySelectorAll('*') : [];
for (const el of all) {
  if (!rendered(el)) continue;
  const r = el.getBoundingClientRect();
  const box = [r.x, r.y, r.width, r.height];
  const tag = el.tagName.toLowerCase();
  const inline = Array.from(el.attributes).some((a) => a.name.length > 2 && a.name.startsWith('on'));
  const text = (el.innerText || '').replace(/\s+/g, ' ').trim();
  const xpath = xpathOf(el);
  const listener = listeners.has(el);
  if (interactive.has(tag) || inline || listener) {
    const entry = {
      tag: tag, type: el.getAttribute('type') || '', outer_html: el.outerHTML, inner_text: text,
      xpath: xpath, bbox: box, inline_handler: inline, listener: listener,
      contenteditable: el.isContentEditable
    };
    if (tag === 'select') entry.options = Array.from(el.options).map((o) => o.text.trim());
    elements.push(entry);
  }
  const ownText = Array.from(el.childNodes).some((n) => n.nodeType === 3 && n.textContent.trim());
  if (ownText && text) texts.push({xpath: xpath, text: text, bbox: box});
}
const meta = document.querySelector('meta[name="description" i]');
return {url: location.href, meta_description: meta ? meta.content : '', elements: elements, texts: texts};
)JS";

class WireSession final : public Session {
 public:
  WireSession(const BrowserConfig& config, std::string_view start_url)
      : config_(config), endpoint_(internal::parse_endpoint(config.wire_endpoint)) {
    Json capabilities = {{"capabilities", {{"alwaysMatch", Json::object()}}}};
    auto created = call("POST", "/session", capabilities, ErrorCode::kBackendUnreachable);
    if (!created.contains("sessionId")) fail(ErrorCode::kBackendUnreachable, "WebDriver returned no session id");
    id_ = created.at("sessionId").get<std::string>();
    open_ = true;
    auto cap_ms = config_.settle_cap.count();
    call("POST", session_path("/timeouts"), Json{{"script", cap_ms + 5000}}, ErrorCode::kBackendUnreachable);
    call("POST", session_path("/url"), Json{{"url", std::string(start_url)}}, ErrorCode::kPageUnavailable);
    run_sync(kListenerProbeScript, ErrorCode::kPageUnavailable);
  }

  ~WireSession() override {
    try {
      close();
    } catch (...) {
    }
  }

  const std::string& session_id() const override { return id_; }
  BackendKind backend() const override { return BackendKind::kWire; }
  bool is_open() const override { return open_; }

  std::string current_url() const override {
    require_open();
    return call("GET", session_path("/url"), Json(), ErrorCode::kPageUnavailable).get<std::string>();
  }

  PageState capture_state(int step_index) override {
    require_open();
    settle();
    auto snapshot = run_sync(kCaptureScript, ErrorCode::kPageUnavailable);
    PageState page = parse_wire_capture(snapshot.dump(), step_index);
    auto shot = call("GET", session_path("/screenshot"), Json(), ErrorCode::kScreenshotFailed);
    if (!shot.is_string()) fail(ErrorCode::kScreenshotFailed, "screenshot payload is not a string");
    page.screenshot = screenshot_from_png(util::base64_decode(shot.get<std::string>()));
    return page;
  }

  ExecutionReport execute(const Action& action) override {
    require_open();
    check_action_input(action.action_type, action.input);
    const std::string before = current_url();
    const std::string element = find_element("/element", action.element_xpath);
    const std::string element_path = session_path("/element/" + element);
    switch (action.action_type) {
      case ActionType::kClick:
        call("POST", element_path + "/click", Json::object(), ErrorCode::kActionRejected);
        break;
      case ActionType::kType:
        call("POST", element_path + "/clear", Json::object(), ErrorCode::kActionRejected);
        call("POST", element_path + "/value", Json{{"text", *action.text()}}, ErrorCode::kActionRejected);
        break;
      case ActionType::kSelect: {
        auto options = call("POST", element_path + "/elements", Json{{"using", "xpath"}, {"value", "./option"}},
                            ErrorCode::kActionRejected);
        const int index = *action.option_index();
        if (!options.is_array() || index >= static_cast<int>(options.size())) {
          fail(ErrorCode::kActionRejected, "option index " + std::to_string(index) + " out of range");
        }
        auto option = options.at(static_cast<std::size_t>(index)).at(std::string(kElementKey)).get<std::string>();
        call("POST", session_path("/element/" + option + "/click"), Json::object(), ErrorCode::kActionRejected);
        break;
      }
    }
    settle();
    run_sync(kListenerProbeScript, ErrorCode::kPageUnavailable);
    const std::string after = current_url();
    return ExecutionReport{after != before, after};
  }

  void close() override {
    if (!open_) return;
    open_ = false;
    internal::http_request(endpoint_, "DELETE", "/session/" + id_, "", {}, std::chrono::seconds(30),
                           ErrorCode::kBackendUnreachable);
  }

 private:
  void require_open() const {
    if (!open_) fail(ErrorCode::kSessionClosed, "session " + id_ + " is closed");
  }

  std::string session_path(const std::string& suffix) const { return "/session/" + id_ + suffix; }

  // Returns the "value" member; WebDriver errors are mapped to error_code.
  Json call(std::string_view method, const std::string& path, const Json& body, ErrorCode error_code) const {
    auto timeout = std::chrono::duration_cast<std::chrono::seconds>(config_.settle_cap) + std::chrono::seconds(30);
    auto response = internal::http_request(endpoint_, method, path, body.is_null() ? "" : body.dump(), {}, timeout,
                                           ErrorCode::kBackendUnreachable);
    Json parsed = Json::parse(response.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("value")) {
      fail(error_code, std::string(method) + " " + path + ": unexpected response (HTTP " +
                           std::to_string(response.status) + ")");
    }
    const auto& value = parsed.at("value");
    if (response.status >= 400 || (value.is_object() && value.contains("error"))) {
      std::string error = value.is_object() ? value.value("error", "") : "";
      std::string message = value.is_object() ? value.value("message", "") : "";
      if (error == "no such element" || error == "stale element reference") {
        fail(ErrorCode::kElementNotFound, path + ": " + message);
      }
      fail(error_code, std::string(method) + " " + path + ": " + error + " " + message);
    }
    return value;
  }

  Json run_sync(std::string_view script, ErrorCode error_code) const {
    return call("POST", session_path("/execute/sync"), Json{{"script", script}, {"args", Json::array()}}, error_code);
  }

  void settle() const {
    Json args = Json::array({config_.quiescence.count(), config_.settle_cap.count()});
    call("POST", session_path("/execute/async"), Json{{"script", kQuiescenceScript}, {"args", args}},
         ErrorCode::kPageUnavailable);
  }

  std::string find_element(const std::string& route, const std::string& xpath) const {
    auto value = call("POST", session_path(route), Json{{"using", "xpath"}, {"value", xpath}},
                      ErrorCode::kElementNotFound);
    if (!value.is_object() || !value.contains(std::string(kElementKey))) fail(ErrorCode::kElementNotFound, xpath);
    return value.at(std::string(kElementKey)).get<std::string>();
  }

  BrowserConfig config_;
  internal::Endpoint endpoint_;
  std::string id_;
  bool open_ = false;
};

FixtureTransition transition_from_json(const Json& json) {
  FixtureTransition out;
  out.from = json.at("from").get<std::string>();
  out.xpath = json.at("xpath").get<std::string>();
  out.action = parse_action_type(json.value("action", "click"));
  out.input_pattern = json.value("input_pattern", "");
  out.to = json.at("to").get<std::string>();
  return out;
}

}  // namespace

std::unique_ptr<Session> open_session(const BrowserConfig& config, std::string_view start_url,
                                      std::string_view app_name) {
  if (config.backend == BackendKind::kWire) return std::make_unique<WireSession>(config, start_url);
  if (app_name.empty()) fail(ErrorCode::kUnknownFixtureApp, "no fixture app named");
  auto app = FixtureApp::load(config.fixture_dir / std::string(app_name));
  return std::make_unique<FixtureSession>(std::move(app), std::string(start_url));
}

FixtureApp FixtureApp::load(const std::filesystem::path& dir) {
  const auto transitions_path = dir / "transitions.json";
  if (!std::filesystem::is_regular_file(transitions_path)) {
    fail(ErrorCode::kUnknownFixtureApp, "no fixture app at " + dir.string());
  }
  Json manifest;
  Json geometry = Json::object();
  try {
    manifest = Json::parse(util::read_file(transitions_path));
    if (std::filesystem::is_regular_file(dir / "geometry.json")) {
      geometry = Json::parse(util::read_file(dir / "geometry.json"));
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInvalidSpec, dir.string() + ": " + e.what());
  }

  FixtureApp app;
  try {
    app.name = manifest.value("app", dir.filename().string());
    app.initial_state = manifest.at("initial_state").get<std::string>();
    for (const auto& entry : manifest.at("states")) {
      FixtureSnapshot snapshot;
      snapshot.state_id = entry.at("id").get<std::string>();
      snapshot.url = entry.at("url").get<std::string>();
      snapshot.html = util::read_file(dir / entry.at("html").get<std::string>());
      snapshot.meta_description = extract_meta_description(snapshot.html);
      snapshot.screenshot = util::read_binary(dir / entry.at("screenshot").get<std::string>());
      if (geometry.contains(snapshot.state_id)) {
        for (const auto& [xpath, box] : geometry.at(snapshot.state_id).items()) {
          snapshot.element_geometry[xpath] = bbox_from_json(box);
        }
      }
      auto id = snapshot.state_id;
      if (!app.states.emplace(id, std::move(snapshot)).second) fail(ErrorCode::kInvalidSpec, "duplicate state " + id);
    }
    for (const auto& entry : manifest.value("transitions", Json::array())) {
      auto transition = transition_from_json(entry);
      if (!app.states.count(transition.from) || !app.states.count(transition.to)) {
        fail(ErrorCode::kInvalidSpec, "transition references unknown state: " + transition.from + " -> " + transition.to);
      }
      app.states.at(transition.from).transitions.push_back(std::move(transition));
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInvalidSpec, dir.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIoError) fail(ErrorCode::kInvalidSpec, e.what());
    throw;
  }
  if (!app.states.count(app.initial_state)) fail(ErrorCode::kInvalidSpec, "unknown initial state " + app.initial_state);
  return app;
}

PageState capture_fixture_state(const FixtureSnapshot& snapshot, int step_index) {
  html::Document doc(snapshot.html);
  PageState page;
  page.step_index = step_index;
  page.url = snapshot.url;
  page.meta_description = snapshot.meta_description;
  page.screenshot = screenshot_from_png(snapshot.screenshot);

  for (const auto* node : doc.elements()) {
    if (inside_head(*node) || node->tag == "head" || node->tag == "html" || node->tag == "body") continue;
    auto geometry = snapshot.element_geometry.find(node->xpath);
    const BBox bbox = geometry == snapshot.element_geometry.end() ? BBox{} : geometry->second;
    const std::string type = node->attr("type") ? *node->attr("type") : "";
    const bool inline_handler = has_inline_handler(*node);
    const std::string text = html::Document::inner_text(*node);

    if (geometry != snapshot.element_geometry.end() && !text.empty()) {
      page.text_blocks.push_back(TextBlock{node->xpath, text, bbox});
    }
    if (!is_actionable(node->tag, type, inline_handler, false)) continue;

    ActionableElement element;
    element.ordinal = static_cast<int>(page.elements.size());
    element.tag_name = node->tag;
    element.outer_html = doc.outer_html(*node);
    element.inner_text = text;
    element.xpath = node->xpath;
    element.bbox = bbox;
    element.accepts_text = accepts_text_input(node->tag, type, is_contenteditable(*node));
    element.has_listener = inline_handler;
    if (node->tag == "select") element.select_options = option_texts(*node);
    page.elements.push_back(std::move(element));
  }
  return page;
}

std::string extract_meta_description(std::string_view html_text) {
  html::Document doc{std::string(html_text)};
  for (const auto* node : doc.elements()) {
    if (node->tag != "meta") continue;
    const auto* name = node->attr("name");
    const auto* content = node->attr("content");
    if (name != nullptr && content != nullptr && util::to_lower(*name) == "description") return *content;
  }
  return "";
}

std::string_view wire_capture_script() { return kCaptureScript; }

PageState parse_wire_capture(const std::string& json_text, int step_index) {
  Json json = Json::parse(json_text, nullptr, false);
  if (json.is_discarded() || !json.is_object()) fail(ErrorCode::kPageUnavailable, "capture script returned no object");
  PageState page;
  page.step_index = step_index;
  try {
    page.url = json.value("url", "");
    page.meta_description = json.value("meta_description", "");
    for (const auto& entry : json.value("elements", Json::array())) {
      const std::string tag = util::to_lower(entry.at("tag").get<std::string>());
      const std::string type = entry.value("type", "");
      const bool inline_handler = entry.value("inline_handler", false);
      const bool listener = entry.value("listener", false);
      if (!is_actionable(tag, type, inline_handler, listener)) continue;
      ActionableElement element;
      element.ordinal = static_cast<int>(page.elements.size());
      element.tag_name = tag;
      element.outer_html = entry.value("outer_html", "");
      element.inner_text = util::collapse_whitespace(entry.value("inner_text", ""));
      element.xpath = entry.at("xpath").get<std::string>();
      element.bbox = bbox_from_json(entry.at("bbox"));
      element.accepts_text = accepts_text_input(tag, type, entry.value("contenteditable", false));
      element.has_listener = inline_handler || listener;
      if (entry.contains("options")) element.select_options = entry.at("options").get<std::vector<std::string>>();
      page.elements.push_back(std::move(element));
    }
    for (const auto& entry : json.value("texts", Json::array())) {
      page.text_blocks.push_back(TextBlock{entry.at("xpath").get<std::string>(),
                                           util::collapse_whitespace(entry.at("text").get<std::string>()),
                                           bbox_from_json(entry.at("bbox"))});
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::kPageUnavailable, std::string("malformed capture result: ") + e.what());
  }
  return page;
}

}  // namespace funcnav
