#include "segtrack/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <initializer_list>

namespace segtrack::html {
namespace {

bool one_of(std::string_view tag, std::initializer_list<std::string_view> set) {
  return std::find(set.begin(), set.end(), tag) != set.end();
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_raw_text_element(std::string_view tag) {
  return one_of(tag, {"script", "style", "textarea", "title", "xmp", "iframe", "noembed",
                      "noframes", "noscript"});
}

// Elements whose character data is not page text.
bool is_hidden_text_element(std::string_view tag) {
  return one_of(tag, {"script", "style", "template", "noscript", "iframe", "noembed",
                      "noframes", "head"});
}

bool is_inline_element(std::string_view tag) {
  return one_of(tag, {"a",    "abbr", "b",    "bdi",  "bdo",  "cite",  "code",   "data",
                      "dfn",  "em",   "i",    "kbd",  "mark", "q",     "s",      "samp",
                      "small", "span", "strong", "sub", "sup", "time", "u", "var", "font",
                      "label", "tt",  "big",  "strike", "nobr", "wbr"});
}

bool closes_paragraph(std::string_view tag) {
  return one_of(tag, {"address", "article", "aside",  "blockquote", "center",  "details",
                      "dialog",  "dir",     "div",    "dl",         "fieldset", "figcaption",
                      "figure",  "footer",  "form",   "h1",         "h2",       "h3",
                      "h4",      "h5",      "h6",     "header",     "hgroup",   "hr",
                      "li",      "dd",      "dt",     "main",       "menu",     "nav",
                      "ol",      "p",       "pre",    "section",    "summary",  "table",
                      "ul",      "listing", "xmp"});
}

bool is_heading(std::string_view tag) {
  return tag.size() == 2 && tag[0] == 'h' && tag[1] >= '1' && tag[1] <= '6';
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

struct NamedEntity {
  std::string_view name;
  char32_t code_point;
};

constexpr std::array kNamedEntities{
    NamedEntity{"amp", U'&'},      NamedEntity{"lt", U'<'},       NamedEntity{"gt", U'>'},
    NamedEntity{"quot", U'"'},     NamedEntity{"apos", U'\''},    NamedEntity{"nbsp", 0xA0},
    NamedEntity{"copy", 0xA9},     NamedEntity{"reg", 0xAE},      NamedEntity{"mdash", 0x2014},
    NamedEntity{"ndash", 0x2013},  NamedEntity{"hellip", 0x2026}, NamedEntity{"laquo", 0xAB},
    NamedEntity{"raquo", 0xBB},    NamedEntity{"ldquo", 0x201C},  NamedEntity{"rdquo", 0x201D},
    NamedEntity{"lsquo", 0x2018},  NamedEntity{"rsquo", 0x2019},  NamedEntity{"middot", 0xB7},
    NamedEntity{"bull", 0x2022},   NamedEntity{"trade", 0x2122},  NamedEntity{"euro", 0x20AC},
    NamedEntity{"aacute", 0xE1},   NamedEntity{"eacute", 0xE9},   NamedEntity{"iacute", 0xED},
    NamedEntity{"oacute", 0xF3},   NamedEntity{"uacute", 0xFA},   NamedEntity{"agrave", 0xE0},
    NamedEntity{"egrave", 0xE8},   NamedEntity{"auml", 0xE4},     NamedEntity{"ouml", 0xF6},
    NamedEntity{"uuml", 0xFC},     NamedEntity{"szlig", 0xDF},    NamedEntity{"ccedil", 0xE7},
    NamedEntity{"ntilde", 0xF1},   NamedEntity{"shy", 0xAD},      NamedEntity{"times", 0xD7},
};

class TreeBuilder {
 public:
  explicit TreeBuilder(std::string_view source) : src_(source) {
    Node root;
    root.kind = NodeKind::Document;
    nodes_.push_back(std::move(root));
    open_.push_back(0);
  }

  std::vector<Node> run() {
    std::size_t text_begin = 0;
    std::size_t pos = 0;
    const std::size_t n = src_.size();
    while (pos < n) {
      const std::size_t lt = src_.find('<', pos);
      if (lt == std::string_view::npos || lt + 1 >= n) break;
      const char next = src_[lt + 1];
      std::size_t resume = npos;
      if (src_.compare(lt, 4, "<!--") == 0) {
        flush_text(text_begin, lt);
        resume = comment(lt);
      } else if (next == '!' || next == '?') {
        flush_text(text_begin, lt);
        const std::size_t gt = src_.find('>', lt);
        resume = gt == std::string_view::npos ? n : gt + 1;
      } else if (next == '/' && lt + 2 < n && is_alpha(src_[lt + 2])) {
        flush_text(text_begin, lt);
        resume = end_tag(lt);
      } else if (next == '/' && lt + 2 < n && src_[lt + 2] == '>') {
        flush_text(text_begin, lt);
        resume = lt + 3;
      } else if (is_alpha(next)) {
        flush_text(text_begin, lt);
        resume = start_tag(lt);
      }
      if (resume == npos) {
        pos = lt + 1;  // a literal '<' in text
      } else {
        pos = resume;
        text_begin = resume;
      }
    }
    flush_text(text_begin, n);
    return std::move(nodes_);
  }

 private:
  std::size_t current() const { return open_.back(); }

  std::size_t add_node(Node node) {
    node.parent = current();
    const std::size_t index = nodes_.size();
    nodes_.push_back(std::move(node));
    nodes_[nodes_[index].parent].children.push_back(index);
    return index;
  }

  void flush_text(std::size_t begin, std::size_t end, bool raw = false) {
    if (end <= begin) return;
    Node text;
    text.kind = NodeKind::Text;
    text.text = std::string(src_.substr(begin, end - begin));
    text.raw_text = raw;
    add_node(std::move(text));
  }

  std::size_t comment(std::size_t lt) {
    const std::size_t close = src_.find("-->", lt + 4);
    Node node;
    node.kind = NodeKind::Comment;
    if (close == std::string_view::npos) {
      node.text = std::string(src_.substr(lt + 4));
      add_node(std::move(node));
      return src_.size();
    }
    node.text = std::string(src_.substr(lt + 4, close - lt - 4));
    add_node(std::move(node));
    return close + 3;
  }

  std::size_t read_name(std::size_t i) const {
    while (i < src_.size() && !is_space(src_[i]) && src_[i] != '/' && src_[i] != '>') ++i;
    return i;
  }

  std::size_t start_tag(std::size_t lt) {
    const std::size_t n = src_.size();
    Node el;
    el.kind = NodeKind::Element;
    el.open_begin = lt;
    std::size_t i = read_name(lt + 1);
    el.tag = lowercase(src_.substr(lt + 1, i - lt - 1));
    el.name_end = i;
    bool self_closing = false;
    while (i < n) {
      while (i < n && (is_space(src_[i]) || src_[i] == '/')) {
        if (src_[i] == '/' && i + 1 < n && src_[i + 1] == '>') self_closing = true;
        ++i;
      }
      if (i >= n) break;
      if (src_[i] == '>') {
        ++i;
        break;
      }
      std::size_t name_begin = i++;
      while (i < n && !is_space(src_[i]) && src_[i] != '/' && src_[i] != '>' && src_[i] != '=') ++i;
      Attribute attr{lowercase(src_.substr(name_begin, i - name_begin)), {}};
      std::size_t j = i;
      while (j < n && is_space(src_[j])) ++j;
      if (j < n && src_[j] == '=') {
        i = j + 1;
        while (i < n && is_space(src_[i])) ++i;
        if (i < n && (src_[i] == '"' || src_[i] == '\'')) {
          const char quote = src_[i];
          const std::size_t close = src_.find(quote, i + 1);
          const std::size_t value_end = close == std::string_view::npos ? n : close;
          attr.value = decode_entities(src_.substr(i + 1, value_end - i - 1));
          i = close == std::string_view::npos ? n : close + 1;
        } else {
          const std::size_t value_begin = i;
          while (i < n && !is_space(src_[i]) && src_[i] != '>') ++i;
          attr.value = decode_entities(src_.substr(value_begin, i - value_begin));
        }
      }
      const bool duplicate = std::any_of(el.attributes.begin(), el.attributes.end(),
                                         [&](const Attribute& a) { return a.name == attr.name; });
      if (!duplicate) el.attributes.push_back(std::move(attr));
    }
    el.open_end = i;

    const std::string tag = el.tag;
    prepare_for(tag);
    const std::size_t index = add_node(std::move(el));
    if (is_void_element(tag) || self_closing) return i;
    open_.push_back(index);

    if (is_raw_text_element(tag)) {
      const std::size_t close = find_raw_close(tag, i);
      flush_text(i, close, true);
      if (close >= n) return n;
      return end_tag(close);
    }
    return i;
  }

  std::size_t find_raw_close(std::string_view tag, std::size_t from) const {
    const std::size_t n = src_.size();
    for (std::size_t i = src_.find("</", from); i != std::string_view::npos;
         i = src_.find("</", i + 2)) {
      const std::size_t name_end = i + 2 + tag.size();
      if (name_end > n) break;
      if (lowercase(src_.substr(i + 2, tag.size())) != tag) continue;
      if (name_end == n || is_space(src_[name_end]) || src_[name_end] == '>' ||
          src_[name_end] == '/')
        return i;
    }
    return n;
  }

  std::size_t end_tag(std::size_t lt) {
    const std::size_t name_end = read_name(lt + 2);
    const std::string tag = lowercase(src_.substr(lt + 2, name_end - lt - 2));
    const std::size_t gt = src_.find('>', name_end);
    const std::size_t resume = gt == std::string_view::npos ? src_.size() : gt + 1;
    for (std::size_t k = open_.size(); k-- > 1;) {
      if (nodes_[open_[k]].tag == tag) {
        nodes_[open_[k]].close_begin = lt;
        open_.resize(k);
        break;
      }
    }
    return resume;
  }

  // Pops through the nearest open element named in `targets`, unless a
  // `boundaries` element is reached first.
  void close_through(std::initializer_list<std::string_view> targets,
                     std::initializer_list<std::string_view> boundaries) {
    for (std::size_t k = open_.size(); k-- > 1;) {
      const std::string& tag = nodes_[open_[k]].tag;
      if (one_of(tag, targets)) {
        open_.resize(k);
        return;
      }
      if (one_of(tag, boundaries)) return;
    }
  }

  // Implied end tags triggered by an incoming start tag.
  void prepare_for(std::string_view tag) {
    if (closes_paragraph(tag)) {
      close_through({"p"}, {"html", "table", "td", "th", "caption", "template", "button",
                            "object", "applet", "marquee"});
    }
    if (tag == "li") {
      close_through({"li"}, {"ul", "ol", "menu", "table", "td", "th", "body", "html"});
    } else if (tag == "dd" || tag == "dt") {
      close_through({"dd", "dt"}, {"dl", "table", "td", "th", "body", "html"});
    } else if (is_heading(tag)) {
      if (is_heading(nodes_[current()].tag)) open_.pop_back();
    } else if (tag == "option") {
      if (nodes_[current()].tag == "option") open_.pop_back();
    } else if (tag == "optgroup") {
      if (nodes_[current()].tag == "option") open_.pop_back();
      if (nodes_[current()].tag == "optgroup") open_.pop_back();
    } else if (tag == "tr") {
      close_through({"tr"}, {"table", "thead", "tbody", "tfoot", "html"});
    } else if (tag == "td" || tag == "th") {
      close_through({"td", "th"}, {"tr", "table", "html"});
    } else if (tag == "thead" || tag == "tbody" || tag == "tfoot") {
      close_through({"thead", "tbody", "tfoot"}, {"table", "html"});
    }
  }

  std::string_view src_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> open_;
};

void collect_text(const std::vector<Node>& nodes, std::size_t index, std::string& out) {
  const Node& node = nodes[index];
  switch (node.kind) {
    case NodeKind::Comment:
      return;
    case NodeKind::Text:
      out += decode_entities(node.text);
      return;
    case NodeKind::Document:
      for (auto child : node.children) collect_text(nodes, child, out);
      return;
    case NodeKind::Element:
      break;
  }
  if (is_hidden_text_element(node.tag)) return;
  const bool separates = node.tag == "br" || !is_inline_element(node.tag);
  if (separates) out += ' ';
  for (auto child : node.children) collect_text(nodes, child, out);
  if (separates) out += ' ';
}

}  // namespace

const std::string* Node::attribute(std::string_view name) const {
  for (const auto& attr : attributes) {
    if (attr.name == name) return &attr.value;
  }
  return nullptr;
}

std::vector<std::size_t> Document::element_children(std::size_t index) const {
  std::vector<std::size_t> out;
  for (auto child : nodes_.at(index).children) {
    if (nodes_[child].kind == NodeKind::Element) out.push_back(child);
  }
  return out;
}

std::string Document::dom_path(std::size_t index) const {
  std::vector<std::size_t> steps;
  for (std::size_t cur = index; cur != 0 && cur != npos; cur = nodes_[cur].parent) {
    const auto siblings = element_children(nodes_[cur].parent);
    const auto it = std::find(siblings.begin(), siblings.end(), cur);
    steps.push_back(static_cast<std::size_t>(it - siblings.begin()) + 1);
  }
  std::string path;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    path += '/';
    path += std::to_string(*it);
  }
  return path;
}

std::optional<std::size_t> Document::resolve(std::string_view dom_path) const {
  if (dom_path.size() < 2 || dom_path.front() != '/') return std::nullopt;
  std::size_t cur = 0;
  std::size_t pos = 1;
  while (pos <= dom_path.size()) {
    std::size_t slash = dom_path.find('/', pos);
    if (slash == std::string_view::npos) slash = dom_path.size();
    const auto step = dom_path.substr(pos, slash - pos);
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(step.data(), step.data() + step.size(), value);
    if (step.empty() || ec != std::errc{} || ptr != step.data() + step.size() || value == 0)
      return std::nullopt;
    const auto children = element_children(cur);
    if (value > children.size()) return std::nullopt;
    cur = children[value - 1];
    pos = slash + 1;
  }
  return cur;
}

std::string Document::text_content(std::size_t index) const {
  std::string raw;
  collect_text(nodes_, index, raw);
  return normalize_whitespace(raw);
}

std::optional<std::size_t> Document::find_first(std::string_view tag) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == NodeKind::Element && nodes_[i].tag == tag) return i;
  }
  return std::nullopt;
}

Document parse(std::string_view source) {
  Document doc;
  doc.nodes_ = TreeBuilder(source).run();
  return doc;
}

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t amp = text.find('&', i);
    if (amp == std::string_view::npos) {
      out.append(text.substr(i));
      break;
    }
    out.append(text.substr(i, amp - i));
    const std::size_t semi = text.find(';', amp + 1);
    if (semi == std::string_view::npos || semi - amp > 12) {
      out += '&';
      i = amp + 1;
      continue;
    }
    const auto body = text.substr(amp + 1, semi - amp - 1);
    bool decoded = false;
    if (body.size() > 1 && body[0] == '#') {
      const bool hex = body[1] == 'x' || body[1] == 'X';
      const auto digits = body.substr(hex ? 2 : 1);
      std::uint32_t cp = 0;
      const auto [ptr, ec] =
          std::from_chars(digits.data(), digits.data() + digits.size(), cp, hex ? 16 : 10);
      if (!digits.empty() && ec == std::errc{} && ptr == digits.data() + digits.size()) {
        append_utf8(out, static_cast<char32_t>(cp));
        decoded = true;
      }
    } else {
      for (const auto& entity : kNamedEntities) {
        if (entity.name == body) {
          append_utf8(out, entity.code_point);
          decoded = true;
          break;
        }
      }
    }
    if (decoded) {
      i = semi + 1;
    } else {
      out += '&';
      i = amp + 1;
    }
  }
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const bool nbsp = static_cast<unsigned char>(c) == 0xC2 && i + 1 < text.size() &&
                      static_cast<unsigned char>(text[i + 1]) == 0xA0;
    if (is_space(c) || nbsp) {
      if (nbsp) ++i;
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::size_t count_code_points(std::string_view utf8) {
  return static_cast<std::size_t>(std::count_if(utf8.begin(), utf8.end(), [](char c) {
    return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
  }));
}

std::string take_code_points(std::string_view utf8, std::size_t count) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < utf8.size(); ++i) {
    if ((static_cast<unsigned char>(utf8[i]) & 0xC0) != 0x80) {
      if (seen == count) return std::string(utf8.substr(0, i));
      ++seen;
    }
  }
  return std::string(utf8);
}

bool is_void_element(std::string_view tag) {
  return one_of(tag, {"area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta",
                      "param", "source", "track", "wbr", "keygen"});
}

}  // namespace segtrack::html
