#include "segtrack/segmenter.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "segtrack/error.hpp"
#include "segtrack/html.hpp"

namespace segtrack {
namespace {

using html::Document;
using html::NodeKind;

bool is_whitespace_only(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  });
}

bool has_instrumentation(const Document& doc) {
  for (const auto& node : doc.nodes()) {
    if (node.kind != NodeKind::Element) continue;
    if (node.attribute(kSegmentIdAttribute) != nullptr) return true;
    const auto* id = node.attribute("id");
    if (id != nullptr && *id == kConfigElementId) return true;
  }
  return false;
}

class BlockSelector {
 public:
  BlockSelector(const Document& doc, const SegmenterConfig& config)
      : doc_(doc), text_len_(doc.size(), 0), candidate_(doc.size(), false) {
    const std::set<std::string, std::less<>> tags(config.block_tags.begin(),
                                                  config.block_tags.end());
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const auto& node = doc.node(i);
      if (node.kind != NodeKind::Element || !tags.contains(node.tag)) continue;
      text_len_[i] = html::count_code_points(doc.text_content(i));
      candidate_[i] = text_len_[i] >= config.min_text_len;
    }
  }

  std::vector<std::size_t> select() {
    std::vector<std::size_t> chosen;
    visit(0, chosen);
    return chosen;
  }

 private:
  void visit(std::size_t index, std::vector<std::size_t>& chosen) {
    if (candidate_[index]) {
      chosen.push_back(settle(index));
      return;
    }
    for (auto child : doc_.element_children(index)) visit(child, chosen);
  }

  // Follows dominating candidate descendants down to a block that has none.
  std::size_t settle(std::size_t block) {
    for (;;) {
      std::size_t best = html::npos;
      std::size_t best_depth = 0;
      find_dominating(block, text_len_[block], 1, best, best_depth);
      if (best == html::npos) return block;
      block = best;
    }
  }

  void find_dominating(std::size_t index, std::size_t outer_len, std::size_t depth,
                       std::size_t& best, std::size_t& best_depth) {
    for (auto child : doc_.element_children(index)) {
      // text_len * 5 >= outer_len * 4  <=>  child holds >= 80% of the outer text
      if (candidate_[child] && text_len_[child] * 5 >= outer_len * 4 && depth > best_depth) {
        best = child;
        best_depth = depth;
      }
      find_dominating(child, outer_len, depth + 1, best, best_depth);
    }
  }

  const Document& doc_;
  std::vector<std::size_t> text_len_;
  std::vector<bool> candidate_;
};

struct Insertion {
  std::size_t offset;
  std::string text;
};

std::string splice(std::string_view source, std::vector<Insertion> insertions) {
  std::stable_sort(insertions.begin(), insertions.end(),
                   [](const Insertion& a, const Insertion& b) { return a.offset < b.offset; });
  std::string out;
  std::size_t extra = 0;
  for (const auto& ins : insertions) extra += ins.text.size();
  out.reserve(source.size() + extra);
  std::size_t pos = 0;
  for (const auto& ins : insertions) {
    out.append(source.substr(pos, ins.offset - pos));
    out.append(ins.text);
    pos = ins.offset;
  }
  out.append(source.substr(pos));
  return out;
}

std::string id_attribute(SegmentId id) {
  return " " + std::string(kSegmentIdAttribute) + "=\"" + std::to_string(id) + "\"";
}

}  // namespace

std::vector<std::string> SegmenterConfig::default_block_tags() {
  return {"div", "section", "article", "p",      "table", "ul",
          "ol",  "header",  "footer",  "aside", "nav",   "form"};
}

std::vector<Segment> assign_ids(const std::vector<std::string>& dom_paths) {
  std::unordered_set<std::string_view> seen;
  std::vector<Segment> out;
  out.reserve(dom_paths.size());
  for (const auto& path : dom_paths) {
    if (!seen.insert(path).second) throw Error(ErrorCode::DuplicatePath, path);
    Segment seg;
    seg.id = static_cast<SegmentId>(out.size()) + 1;
    seg.dom_path = path;
    out.push_back(std::move(seg));
  }
  return out;
}

SegmentationResult segment_page(std::string_view source, const SegmenterConfig& config,
                                std::string page_url, std::optional<UtcSeconds> generated_at) {
  if (is_whitespace_only(source)) throw Error(ErrorCode::EmptyDocument, "document has no content");
  const Document doc = html::parse(source);
  if (has_instrumentation(doc))
    throw Error(ErrorCode::AlreadyInstrumented, "document already carries segment annotations");

  const auto blocks = BlockSelector(doc, config).select();
  if (blocks.size() > config.max_segments) {
    throw Error(ErrorCode::TooManySegments, std::to_string(blocks.size()) + " segments exceed limit " +
                                                std::to_string(config.max_segments));
  }

  std::vector<std::string> paths;
  paths.reserve(blocks.size());
  for (auto block : blocks) paths.push_back(doc.dom_path(block));

  SegmentationResult result;
  result.manifest.page_url = std::move(page_url);
  result.manifest.generated_at = generated_at.value_or(
      std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
  result.manifest.segments = assign_ids(paths);

  std::vector<Insertion> insertions;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    auto& seg = result.manifest.segments[i];
    const auto& node = doc.node(blocks[i]);
    seg.element_kind = node.tag;
    seg.label = html::normalize_whitespace(
        html::take_code_points(doc.text_content(blocks[i]), kLabelLength));
    insertions.push_back({node.name_end, id_attribute(seg.id)});
  }
  result.annotated_html = splice(source, std::move(insertions));
  return result;
}

std::string config_element(std::string_view endpoint_url, std::string_view page_url) {
  nlohmann::ordered_json config;
  config["endpoint"] = endpoint_url;
  config["page_url"] = page_url;
  config["v"] = 1;
  std::string body = config.dump();
  // Keep the JSON from terminating the script element early.
  for (std::size_t pos = body.find("</"); pos != std::string::npos; pos = body.find("</", pos + 3))
    body.replace(pos, 2, "<\\/");
  return "<script type=\"application/json\" id=\"" + std::string(kConfigElementId) + "\">" + body +
         "</script>";
}

std::string instrument(std::string_view annotated_html, const PageManifest& manifest,
                       std::string_view endpoint_url) {
  const Document doc = html::parse(annotated_html);
  for (const auto& node : doc.nodes()) {
    const auto* id = node.attribute("id");
    if (node.kind == NodeKind::Element && id != nullptr && *id == kConfigElementId)
      throw Error(ErrorCode::AlreadyInstrumented, "tracker configuration element already present");
  }

  std::vector<Insertion> insertions;
  std::set<std::size_t> segment_nodes;
  for (const auto& seg : manifest.segments) {
    const auto index = doc.resolve(seg.dom_path);
    if (!index) throw Error(ErrorCode::ManifestMismatch, "path " + seg.dom_path + " does not resolve");
    const auto& node = doc.node(*index);
    if (!seg.element_kind.empty() && node.tag != seg.element_kind) {
      throw Error(ErrorCode::ManifestMismatch, "path " + seg.dom_path + " is <" + node.tag +
                                                   ">, manifest says <" + seg.element_kind + ">");
    }
    if (const auto* existing = node.attribute(kSegmentIdAttribute)) {
      if (*existing != std::to_string(seg.id)) {
        throw Error(ErrorCode::ManifestMismatch,
                    "path " + seg.dom_path + " carries id " + *existing + ", manifest says " +
                        std::to_string(seg.id));
      }
    } else {
      insertions.push_back({node.name_end, id_attribute(seg.id)});
    }
    segment_nodes.insert(*index);
  }
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& node = doc.node(i);
    if (node.kind == NodeKind::Element && node.attribute(kSegmentIdAttribute) != nullptr &&
        !segment_nodes.contains(i)) {
      throw Error(ErrorCode::ManifestMismatch,
                  "element at " + doc.dom_path(i) + " carries a segment id not in the manifest");
    }
  }

  std::size_t config_at = annotated_html.size();
  for (std::string_view tag : {"body", "html"}) {
    const auto index = doc.find_first(tag);
    if (index && doc.node(*index).close_begin != html::npos) {
      config_at = doc.node(*index).close_begin;
      break;
    }
  }
  insertions.push_back({config_at, config_element(endpoint_url, manifest.page_url)});
  return splice(annotated_html, std::move(insertions));
}

std::string manifest_to_json(const PageManifest& manifest) {
  nlohmann::ordered_json out;
  out["page_url"] = manifest.page_url;
  out["generated_at"] = format_rfc3339(manifest.generated_at);
  out["segments"] = nlohmann::ordered_json::array();
  for (const auto& seg : manifest.segments) {
    nlohmann::ordered_json s;
    s["id"] = seg.id;
    s["dom_path"] = seg.dom_path;
    s["label"] = seg.label;
    s["element_kind"] = seg.element_kind;
    out["segments"].push_back(std::move(s));
  }
  return out.dump(2) + "\n";
}

PageManifest manifest_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    PageManifest manifest;
    manifest.page_url = doc.at("page_url").get<std::string>();
    manifest.generated_at = parse_rfc3339(doc.at("generated_at").get<std::string>());
    for (const auto& s : doc.at("segments")) {
      if (!s.at("id").is_number_integer())
        throw Error(ErrorCode::MalformedManifest, "segment id must be an integer");
      Segment seg;
      seg.id = s.at("id").get<SegmentId>();
      seg.dom_path = s.at("dom_path").get<std::string>();
      seg.label = s.at("label").get<std::string>();
      seg.element_kind = s.at("element_kind").get<std::string>();
      if (seg.id < 1) throw Error(ErrorCode::MalformedManifest, "segment id must be >= 1");
      manifest.segments.push_back(std::move(seg));
    }
    return manifest;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedManifest, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedManifest) throw;
    throw Error(ErrorCode::MalformedManifest, e.detail());
  }
}

}  // namespace segtrack
