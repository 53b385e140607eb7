#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Tolerant HTML tokenizer and tree builder.
//
// The tree records byte offsets into the source so callers can splice new
// markup into the original text without re-serializing it. Structural repair
// (implied end tags, stray end tags, unclosed elements at EOF) only affects
// the tree; the source bytes are never rewritten.
namespace segtrack::html {

inline constexpr std::size_t npos = static_cast<std::size_t>(-1);

enum class NodeKind { Document, Element, Text, Comment };

struct Attribute {
  std::string name;   // lowercased
  std::string value;  // entity-decoded
};

struct Node {
  NodeKind kind = NodeKind::Element;
  std::string tag;  // lowercased element name, empty for non-elements
  std::vector<Attribute> attributes;
  std::string text;  // raw text for Text/Comment nodes
  bool raw_text = false;  // text node inside script/style/etc.

  std::size_t parent = npos;
  std::vector<std::size_t> children;

  std::size_t open_begin = npos;   // '<' of the start tag
  std::size_t name_end = npos;     // one past the tag name in the start tag
  std::size_t open_end = npos;     // one past the start tag's '>'
  std::size_t close_begin = npos;  // '<' of an explicit end tag, npos if implied

  [[nodiscard]] const std::string* attribute(std::string_view name) const;
};

class Document {
 public:
  [[nodiscard]] const Node& root() const { return nodes_.front(); }
  [[nodiscard]] const Node& node(std::size_t index) const { return nodes_.at(index); }
  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }

  // Element children of `index`, in document order.
  [[nodiscard]] std::vector<std::size_t> element_children(std::size_t index) const;

  // Root-to-node child-index path such as "/1/3/2" (1-based, elements only).
  [[nodiscard]] std::string dom_path(std::size_t index) const;

  // Inverse of dom_path. Returns nullopt when any step is out of range.
  [[nodiscard]] std::optional<std::size_t> resolve(std::string_view dom_path) const;

  // Whitespace-normalized character data below `index`, script/style excluded.
  [[nodiscard]] std::string text_content(std::size_t index = 0) const;

  // First element with this tag in document order.
  [[nodiscard]] std::optional<std::size_t> find_first(std::string_view tag) const;

 private:
  friend Document parse(std::string_view source);
  std::vector<Node> nodes_;
};

[[nodiscard]] Document parse(std::string_view source);

// Replaces character references (&amp;, &#39;, &#x2014;, ...) with UTF-8.
// Unknown references are left untouched.
[[nodiscard]] std::string decode_entities(std::string_view text);

// Collapses runs of whitespace (including U+00A0) to one space and trims.
[[nodiscard]] std::string normalize_whitespace(std::string_view text);

[[nodiscard]] std::size_t count_code_points(std::string_view utf8);

// Leading `count` code points of a UTF-8 string.
[[nodiscard]] std::string take_code_points(std::string_view utf8, std::size_t count);

[[nodiscard]] bool is_void_element(std::string_view tag);

}  // namespace segtrack::html
