#pragma once

// Lenient HTML tokenizer and tree builder. Tokens keep their source spans so
// callers can rewrite markup without re-serializing untouched parts.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace funcnav::html {

struct Attribute {
  std::string name;   // lowercase
  std::string value;  // entity-decoded
  // Source span, including the whitespace that precedes the attribute.
  std::size_t begin = 0;
  std::size_t end = 0;
};

enum class TokenKind { kStartTag, kEndTag, kText, kComment, kDoctype };

struct Token {
  TokenKind kind = TokenKind::kText;
  std::string name;  // lowercase tag name for tags
  std::vector<Attribute> attributes;
  bool self_closing = false;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct TokenStream {
  std::vector<Token> tokens;
  bool malformed = false;  // unterminated tag, quote or comment
};

TokenStream tokenize(std::string_view source);

bool is_void_element(std::string_view tag);
std::string decode_entities(std::string_view text);
std::string escape_text(std::string_view text);
std::string escape_attribute(std::string_view text);

struct Node {
  bool is_text = false;
  std::string tag;  // lowercase; "#document" for the root
  std::vector<Attribute> attributes;
  std::string text;  // decoded, text nodes only
  std::vector<std::unique_ptr<Node>> children;
  Node* parent = nullptr;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string xpath;  // absolute positional path, elements only

  const std::string* attr(std::string_view name) const;
  bool has_attr(std::string_view name) const { return attr(name) != nullptr; }
};

class Document {
 public:
  explicit Document(std::string source);
  Document(const Document&) = delete;
  Document& operator=(const Document&) = delete;
  Document(Document&&) = default;
  Document& operator=(Document&&) = default;

  const Node& root() const { return *root_; }
  const std::string& source() const { return source_; }

  std::string outer_html(const Node& node) const;
  /// Visible text of the subtree with whitespace collapsed.
  static std::string inner_text(const Node& node);
  const Node* find_by_xpath(std::string_view xpath) const;
  /// Every element in document order.
  std::vector<const Node*> elements() const;

 private:
  std::string source_;
  std::unique_ptr<Node> root_;
  std::unordered_map<std::string, const Node*> by_xpath_;
};

}  // namespace funcnav::html
