#include "funcnav/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <map>

#include "funcnav/util.hpp"

namespace funcnav::html {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

bool is_raw_text(std::string_view tag) {
  return tag == "script" || tag == "style" || tag == "textarea" || tag == "title";
}

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class Tokenizer {
 public:
  explicit Tokenizer(std::string_view src) : src_(src) {}

  TokenStream run() {
    while (pos_ < src_.size()) {
      if (src_[pos_] == '<' && try_markup()) continue;
      text_until_markup();
    }
    return std::move(out_);
  }

 private:
  bool try_markup() {
    std::size_t begin = pos_;
    if (src_.compare(pos_, 4, "<!--") == 0) {
      auto close = src_.find("-->", pos_ + 4);
      if (close == std::string_view::npos) {
        out_.malformed = true;
        close = src_.size() - 3;
      }
      pos_ = close + 3;
      push({TokenKind::kComment, "", {}, false, begin, pos_});
      return true;
    }
    if (pos_ + 1 < src_.size() && (src_[pos_ + 1] == '!' || src_[pos_ + 1] == '?')) {
      auto close = src_.find('>', pos_);
      if (close == std::string_view::npos) {
        out_.malformed = true;
        close = src_.size() - 1;
      }
      pos_ = close + 1;
      push({TokenKind::kDoctype, "", {}, false, begin, pos_});
      return true;
    }
    if (pos_ + 2 < src_.size() && src_[pos_ + 1] == '/' && is_alpha(src_[pos_ + 2])) {
      std::size_t i = pos_ + 2;
      std::string name = read_name(i);
      auto close = src_.find('>', i);
      if (close == std::string_view::npos) {
        out_.malformed = true;
        close = src_.size() - 1;
      }
      pos_ = close + 1;
      push({TokenKind::kEndTag, std::move(name), {}, false, begin, pos_});
      return true;
    }
    if (pos_ + 1 < src_.size() && is_alpha(src_[pos_ + 1])) {
      start_tag();
      return true;
    }
    return false;
  }

  std::string read_name(std::size_t& i) {
    std::size_t start = i;
    while (i < src_.size() && !is_space(src_[i]) && src_[i] != '>' && src_[i] != '/') ++i;
    return util::to_lower(src_.substr(start, i - start));
  }

  void start_tag() {
    Token token{TokenKind::kStartTag, "", {}, false, pos_, 0};
    std::size_t i = pos_ + 1;
    token.name = read_name(i);
    bool closed = false;
    while (i < src_.size()) {
      std::size_t attr_begin = i;
      while (i < src_.size() && is_space(src_[i])) ++i;
      if (i >= src_.size()) break;
      if (src_[i] == '>') {
        ++i;
        closed = true;
        break;
      }
      if (src_[i] == '/') {
        if (i + 1 < src_.size() && src_[i + 1] == '>') {
          token.self_closing = true;
          i += 2;
          closed = true;
          break;
        }
        ++i;
        continue;
      }
      std::size_t name_start = i;
      while (i < src_.size() && !is_space(src_[i]) && src_[i] != '=' && src_[i] != '>' &&
             !(src_[i] == '/' && i + 1 < src_.size() && src_[i + 1] == '>')) {
        ++i;
      }
      Attribute attr;
      attr.begin = attr_begin;
      attr.name = util::to_lower(src_.substr(name_start, i - name_start));
      std::size_t after_name = i;
      while (i < src_.size() && is_space(src_[i])) ++i;
      if (i < src_.size() && src_[i] == '=') {
        ++i;
        while (i < src_.size() && is_space(src_[i])) ++i;
        if (i < src_.size() && (src_[i] == '"' || src_[i] == '\'')) {
          char quote = src_[i];
          auto close = src_.find(quote, i + 1);
          if (close == std::string_view::npos) {
            out_.malformed = true;
            attr.value = decode_entities(src_.substr(i + 1));
            i = src_.size();
          } else {
            attr.value = decode_entities(src_.substr(i + 1, close - i - 1));
            i = close + 1;
          }
        } else {
          std::size_t value_start = i;
          while (i < src_.size() && !is_space(src_[i]) && src_[i] != '>') ++i;
          attr.value = decode_entities(src_.substr(value_start, i - value_start));
        }
      } else {
        i = after_name;
      }
      attr.end = i;
      token.attributes.push_back(std::move(attr));
    }
    if (!closed) out_.malformed = true;
    token.end = i;
    pos_ = i;
    std::string name = token.name;
    bool self_closing = token.self_closing;
    push(std::move(token));
    if (closed && !self_closing && is_raw_text(name)) raw_text(name);
  }

  void raw_text(const std::string& name) {
    std::size_t begin = pos_;
    std::size_t i = pos_;
    while (true) {
      i = src_.find("</", i);
      if (i == std::string_view::npos) {
        out_.malformed = true;
        i = src_.size();
        break;
      }
      if (util::starts_with_ci(src_.substr(i + 2), name)) break;
      i += 2;
    }
    if (i > begin) push({TokenKind::kText, "#raw", {}, false, begin, i});
    pos_ = i;
    if (i < src_.size()) {
      std::size_t j = i + 2;
      read_name(j);
      auto close = src_.find('>', j);
      if (close == std::string_view::npos) {
        out_.malformed = true;
        close = src_.size() - 1;
      }
      pos_ = close + 1;
      push({TokenKind::kEndTag, name, {}, false, i, pos_});
    }
  }

  void text_until_markup() {
    std::size_t begin = pos_;
    auto next = src_.find('<', pos_ + 1);
    pos_ = next == std::string_view::npos ? src_.size() : next;
    if (!out_.tokens.empty() && out_.tokens.back().kind == TokenKind::kText &&
        out_.tokens.back().name.empty() && out_.tokens.back().end == begin) {
      out_.tokens.back().end = pos_;
      return;
    }
    push({TokenKind::kText, "", {}, false, begin, pos_});
  }

  void push(Token token) { out_.tokens.push_back(std::move(token)); }

  std::string_view src_;
  std::size_t pos_ = 0;
  TokenStream out_;
};

const std::map<std::string_view, std::string_view>& named_entities() {
  static const std::map<std::string_view, std::string_view> kEntities = {
      {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "},
      {"middot", "\xC2\xB7"}, {"copy", "\xC2\xA9"}, {"times", "\xC3\x97"}, {"hellip", "\xE2\x80\xA6"},
  };
  return kEntities;
}

bool is_block(std::string_view tag) {
  static constexpr std::array<std::string_view, 21> kBlocks = {
      "address", "article", "aside", "br", "dd", "div", "dl", "dt", "footer", "form", "h1",
      "h2", "h3", "h4", "h5", "h6", "header", "li", "nav", "p", "section"};
  return std::find(kBlocks.begin(), kBlocks.end(), tag) != kBlocks.end() || tag == "tr" || tag == "td" ||
         tag == "option" || tag == "ul";
}

void collect_text(const Node& node, std::string& out) {
  if (node.is_text) {
    out += node.text;
    return;
  }
  if (node.tag == "script" || node.tag == "style" || node.tag == "template" || node.tag == "head") return;
  bool block = is_block(node.tag);
  if (block) out += ' ';
  for (const auto& child : node.children) collect_text(*child, out);
  if (block) out += ' ';
}

}  // namespace

TokenStream tokenize(std::string_view source) { return Tokenizer(source).run(); }

bool is_void_element(std::string_view tag) {
  static constexpr std::array<std::string_view, 14> kVoid = {"area", "base",  "br",   "col",   "embed",
                                                             "hr",   "img",   "input", "link", "meta",
                                                             "param", "source", "track", "wbr"};
  return std::find(kVoid.begin(), kVoid.end(), tag) != kVoid.end();
}

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] != '&') {
      out.push_back(text[i++]);
      continue;
    }
    auto semi = text.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back(text[i++]);
      continue;
    }
    std::string_view name = text.substr(i + 1, semi - i - 1);
    if (!name.empty() && name[0] == '#') {
      try {
        unsigned long cp = (name.size() > 1 && (name[1] == 'x' || name[1] == 'X'))
                               ? std::stoul(std::string(name.substr(2)), nullptr, 16)
                               : std::stoul(std::string(name.substr(1)));
        append_utf8(out, cp);
        i = semi + 1;
        continue;
      } catch (const std::exception&) {
      }
    } else if (auto it = named_entities().find(name); it != named_entities().end()) {
      out += it->second;
      i = semi + 1;
      continue;
    }
    out.push_back(text[i++]);
  }
  return out;
}

std::string escape_text(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string escape_attribute(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      case '<': out += "&lt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

const std::string* Node::attr(std::string_view name) const {
  for (const auto& a : attributes) {
    if (a.name == name) return &a.value;
  }
  return nullptr;
}

Document::Document(std::string source) : source_(std::move(source)), root_(std::make_unique<Node>()) {
  root_->tag = "#document";
  root_->end = source_.size();
  auto stream = tokenize(source_);
  std::vector<Node*> open{root_.get()};

  auto close_top = [&](std::size_t end) {
    open.back()->end = end;
    open.pop_back();
  };

  for (auto& token : stream.tokens) {
    switch (token.kind) {
      case TokenKind::kText: {
        auto node = std::make_unique<Node>();
        node->is_text = true;
        auto raw = std::string_view(source_).substr(token.begin, token.end - token.begin);
        node->text = token.name == "#raw" ? std::string(raw) : decode_entities(raw);
        node->begin = token.begin;
        node->end = token.end;
        node->parent = open.back();
        open.back()->children.push_back(std::move(node));
        break;
      }
      case TokenKind::kStartTag: {
        const std::string& top = open.back()->tag;
        if ((token.name == "li" || token.name == "option" || token.name == "p") && top == token.name) {
          close_top(token.begin);
        }
        auto node = std::make_unique<Node>();
        node->tag = token.name;
        node->attributes = std::move(token.attributes);
        node->begin = token.begin;
        node->end = token.end;
        node->parent = open.back();
        Node* raw_node = node.get();
        open.back()->children.push_back(std::move(node));
        if (!token.self_closing && !is_void_element(token.name)) open.push_back(raw_node);
        break;
      }
      case TokenKind::kEndTag: {
        auto it = std::find_if(open.rbegin(), open.rend() - 1, [&](Node* n) { return n->tag == token.name; });
        if (it == open.rend() - 1) break;
        while (open.back() != *it) close_top(token.begin);
        close_top(token.end);
        break;
      }
      case TokenKind::kComment:
      case TokenKind::kDoctype:
        break;
    }
  }
  while (open.size() > 1) close_top(source_.size());

  std::function<void(Node&)> assign = [&](Node& parent) {
    std::map<std::string, int> seen;
    for (auto& child : parent.children) {
      if (child->is_text) continue;
      int index = ++seen[child->tag];
      bool unique_root = (child->tag == "html" && parent.tag == "#document") ||
                         ((child->tag == "body" || child->tag == "head") && parent.tag == "html");
      child->xpath = parent.xpath + "/" + child->tag + (unique_root ? "" : "[" + std::to_string(index) + "]");
      by_xpath_.emplace(child->xpath, child.get());
      assign(*child);
    }
  };
  assign(*root_);
}

std::string Document::outer_html(const Node& node) const { return source_.substr(node.begin, node.end - node.begin); }

std::string Document::inner_text(const Node& node) {
  std::string raw;
  collect_text(node, raw);
  return util::collapse_whitespace(raw);
}

const Node* Document::find_by_xpath(std::string_view xpath) const {
  auto it = by_xpath_.find(std::string(xpath));
  return it == by_xpath_.end() ? nullptr : it->second;
}

std::vector<const Node*> Document::elements() const {
  std::vector<const Node*> out;
  std::function<void(const Node&)> walk = [&](const Node& node) {
    for (const auto& child : node.children) {
      if (child->is_text) continue;
      out.push_back(child.get());
      walk(*child);
    }
  };
  walk(*root_);
  return out;
}

}  // namespace funcnav::html
