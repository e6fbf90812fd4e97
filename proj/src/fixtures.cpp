#include "funcnav/fixtures.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "funcnav/error.hpp"
#include "funcnav/html.hpp"
#include "funcnav/image.hpp"
#include "funcnav/util.hpp"

namespace funcnav {

namespace {

constexpr std::string_view kContainer = "/html/body/div[1]";

struct Widget {
  std::string ref;
  std::string tag;
  std::string xpath;
  std::string markup;
  std::optional<BBox> box;
};

struct State {
  std::string id;
  std::string url;
  std::string html;
  std::vector<Widget> widgets;
};

Rgba fill_for(const std::string& tag) {
  if (tag == "a") return {219, 234, 254, 255};
  if (tag == "button") return {254, 243, 199, 255};
  if (tag == "input" || tag == "textarea") return {255, 255, 255, 255};
  if (tag == "select") return {237, 233, 254, 255};
  if (tag == "h1" || tag == "h2") return {241, 245, 249, 255};
  return {248, 250, 252, 255};
}

std::string render_widget(const Json& widget, const std::string& tag) {
  std::string out = "<" + tag;
  if (widget.contains("attrs")) {
    for (const auto& [name, value] : widget.at("attrs").items()) {
      out += " " + name + "=\"" + html::escape_attribute(value.get<std::string>()) + "\"";
    }
  }
  out += ">";
  if (html::is_void_element(tag)) return out;
  if (widget.contains("options")) {
    for (const auto& option : widget.at("options")) {
      out += "<option>" + html::escape_text(option.get<std::string>()) + "</option>";
    }
  } else if (widget.contains("html")) {
    out += widget.at("html").get<std::string>();
  } else if (widget.contains("text")) {
    out += html::escape_text(widget.at("text").get<std::string>());
  }
  out += "</" + tag + ">";
  return out;
}

State build_state(const Json& spec) {
  State state;
  state.id = spec.at("id").get<std::string>();
  state.url = spec.at("url").get<std::string>();
  std::map<std::string, int> seen;
  std::string body;
  for (const auto& item : spec.value("widgets", Json::array())) {
    Widget widget;
    widget.ref = item.value("ref", "");
    widget.tag = util::to_lower(item.at("tag").get<std::string>());
    widget.xpath = std::string(kContainer) + "/" + widget.tag + "[" + std::to_string(++seen[widget.tag]) + "]";
    widget.markup = render_widget(item, widget.tag);
    if (item.contains("box")) widget.box = bbox_from_json(item.at("box"));
    body += "  " + widget.markup + "\n";
    state.widgets.push_back(std::move(widget));
  }
  state.html = "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>" +
               html::escape_text(spec.value("title", state.id)) + "</title>\n<meta name=\"description\" content=\"" +
               html::escape_attribute(spec.value("meta_description", "")) + "\">\n</head>\n<body>\n<div class=\"page\">\n" +
               body + "</div>\n</body>\n</html>\n";
  return state;
}

std::vector<std::uint8_t> render_screenshot(const State& state, int width, int height) {
  Raster raster(width, height, {250, 250, 250, 255});
  html::Document doc(state.html);
  for (const auto& widget : state.widgets) {
    if (!widget.box || widget.box->empty()) continue;
    const auto& box = *widget.box;
    const int x = static_cast<int>(box.x);
    const int y = static_cast<int>(box.y);
    const int w = static_cast<int>(box.width);
    const int h = static_cast<int>(box.height);
    raster.fill_rect(x, y, w, h, fill_for(widget.tag));
    raster.outline_rect(x, y, w, h, 1, {148, 163, 184, 255});
    const auto* node = doc.find_by_xpath(widget.xpath);
    std::string label = node ? html::Document::inner_text(*node) : "";
    if (label.empty() && node) {
      if (const auto* placeholder = node->attr("placeholder")) label = *placeholder;
      if (const auto* aria = node->attr("aria-label"); label.empty() && aria) label = *aria;
    }
    const int max_chars = std::max(0, (w - 6) / 6);
    if (static_cast<int>(label.size()) > max_chars) label.resize(static_cast<std::size_t>(max_chars));
    raster.draw_text(x + 4, y + std::max(1, (h - Raster::text_height(1)) / 2), label, 1, {30, 41, 59, 255});
  }
  return raster.encode_png();
}

void check_cycles(const std::vector<std::string>& state_ids, const Json& transitions) {
  std::map<std::string, std::vector<std::string>> edges;
  for (const auto& t : transitions) {
    if (t.value("loop", false)) continue;
    edges[t.at("from").get<std::string>()].push_back(t.at("to").get<std::string>());
  }
  std::map<std::string, int> mark;  // 0 unvisited, 1 on stack, 2 done
  std::function<void(const std::string&)> visit = [&](const std::string& id) {
    mark[id] = 1;
    for (const auto& next : edges[id]) {
      if (mark[next] == 1) fail(ErrorCode::kInvalidSpec, "cycle through '" + next + "' without a loop edge");
      if (mark[next] == 0) visit(next);
    }
    mark[id] = 2;
  };
  for (const auto& id : state_ids) {
    if (mark[id] == 0) visit(id);
  }
}

}  // namespace

std::filesystem::path generate_fixture_app(const Json& spec, const std::filesystem::path& out_root) {
  std::string app;
  int width = 0;
  int height = 0;
  std::vector<State> states;
  Json manifest;
  Json geometry = Json::object();
  try {
    app = spec.at("app").get<std::string>();
    if (app.empty() || app.find('/') != std::string::npos) fail(ErrorCode::kInvalidSpec, "bad app name");
    const auto viewport = spec.value("viewport", Json::array({800, 600}));
    width = viewport.at(0).get<int>();
    height = viewport.at(1).get<int>();
    if (width <= 0 || height <= 0) fail(ErrorCode::kInvalidSpec, "viewport must be positive");

    std::map<std::string, std::size_t> index;
    for (const auto& state_spec : spec.at("states")) {
      State state = build_state(state_spec);
      if (!index.emplace(state.id, states.size()).second) fail(ErrorCode::kInvalidSpec, "duplicate state " + state.id);
      states.push_back(std::move(state));
    }
    const std::string initial = spec.at("initial").get<std::string>();
    if (!index.count(initial)) fail(ErrorCode::kInvalidSpec, "unknown initial state " + initial);

    manifest["app"] = app;
    manifest["initial_state"] = initial;
    manifest["states"] = Json::array();
    for (const auto& state : states) {
      manifest["states"].push_back({{"id", state.id},
                                    {"url", state.url},
                                    {"html", "states/" + state.id + ".html"},
                                    {"screenshot", "screenshots/" + state.id + ".png"}});
      Json boxes = Json::object();
      for (const auto& widget : state.widgets) {
        if (widget.box) boxes[widget.xpath] = to_json(*widget.box);
      }
      geometry[state.id] = std::move(boxes);
    }

    const Json transitions = spec.value("transitions", Json::array());
    manifest["transitions"] = Json::array();
    for (const auto& t : transitions) {
      const auto from = t.at("from").get<std::string>();
      const auto to = t.at("to").get<std::string>();
      if (!index.count(from) || !index.count(to)) {
        fail(ErrorCode::kInvalidSpec, "transition between unknown states " + from + " -> " + to);
      }
      const State& source = states[index.at(from)];
      std::string xpath;
      if (t.contains("ref")) {
        const auto ref = t.at("ref").get<std::string>();
        auto it = std::find_if(source.widgets.begin(), source.widgets.end(),
                               [&](const Widget& w) { return w.ref == ref; });
        if (it == source.widgets.end()) fail(ErrorCode::kInvalidSpec, "state " + from + " has no widget '" + ref + "'");
        xpath = it->xpath;
      } else {
        xpath = t.at("xpath").get<std::string>();
        html::Document doc(source.html);
        if (doc.find_by_xpath(xpath) == nullptr) {
          fail(ErrorCode::kInvalidSpec, "state " + from + " has no element at " + xpath);
        }
      }
      Json entry = {{"from", from}, {"xpath", xpath}, {"action", t.value("action", "click")}};
      parse_action_type(entry["action"].get<std::string>());
      if (t.contains("input_pattern")) entry["input_pattern"] = t.at("input_pattern");
      entry["to"] = to;
      manifest["transitions"].push_back(std::move(entry));
    }
    std::vector<std::string> ids;
    for (const auto& state : states) ids.push_back(state.id);
    check_cycles(ids, transitions);
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInvalidSpec, std::string("malformed fixture spec: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidSpec) throw;
    fail(ErrorCode::kInvalidSpec, e.what());
  }

  const auto dir = out_root / app;
  std::filesystem::create_directories(dir / "states");
  std::filesystem::create_directories(dir / "screenshots");
  for (const auto& state : states) {
    util::write_file_atomic(dir / "states" / (state.id + ".html"), state.html);
    auto png = render_screenshot(state, width, height);
    util::write_file_atomic(dir / "screenshots" / (state.id + ".png"), std::span<const std::uint8_t>(png));
  }
  util::write_file_atomic(dir / "geometry.json", geometry.dump(2) + "\n");
  util::write_file_atomic(dir / "transitions.json", manifest.dump(2) + "\n");
  return dir;
}

std::filesystem::path generate_fixture_app(const std::filesystem::path& spec_path,
                                           const std::filesystem::path& out_root) {
  Json spec = Json::parse(util::read_file(spec_path), nullptr, false);
  if (spec.is_discarded()) fail(ErrorCode::kInvalidSpec, spec_path.string() + " is not valid JSON");
  return generate_fixture_app(spec, out_root);
}

}  // namespace funcnav
