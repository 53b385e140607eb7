#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segtrack/time_util.hpp"

namespace segtrack {

using SegmentId = std::int64_t;

/// One identified block of a page.
struct Segment {
  SegmentId id = 0;
  std::string dom_path;      // "/1/3/2": 1-based element-child indices from the document root
  std::string label;         // first 40 characters of the block's normalized text
  std::string element_kind;  // tag name of the segment root

  bool operator==(const Segment&) const = default;
};

/// A page as the ordered set of its segments.
struct PageManifest {
  std::string page_url;
  UtcSeconds generated_at{};
  std::vector<Segment> segments;

  bool operator==(const PageManifest&) const = default;
};

struct SegmenterConfig {
  std::size_t min_text_len = 30;
  std::vector<std::string> block_tags = default_block_tags();
  std::size_t max_segments = 256;

  static std::vector<std::string> default_block_tags();
};

struct SegmentationResult {
  PageManifest manifest;
  std::string annotated_html;
};

inline constexpr std::string_view kSegmentIdAttribute = "data-seg-id";
inline constexpr std::string_view kConfigElementId = "segtrack-config";
inline constexpr std::size_t kLabelLength = 40;

/// Segments `html` and returns the manifest plus a copy of the input with a
/// `data-seg-id` attribute added to every segment root.
///
/// A segment is a block element (config.block_tags) holding at least
/// min_text_len characters of text, unless one of its candidate descendants
/// holds 80% or more of that text; then the deepest such descendant stands in
/// for it. Segments never nest and are numbered 1..n in document order.
///
/// Throws Error with EmptyDocument, AlreadyInstrumented or TooManySegments.
[[nodiscard]] SegmentationResult segment_page(std::string_view html,
                                              const SegmenterConfig& config = {},
                                              std::string page_url = {},
                                              std::optional<UtcSeconds> generated_at = {});

/// Numbers candidate paths 1..n in list order. Throws DuplicatePath.
[[nodiscard]] std::vector<Segment> assign_ids(const std::vector<std::string>& dom_paths);

/// Adds the tracker configuration element (and any missing segment-id
/// attributes) to a document segmented by segment_page.
///
/// Throws AlreadyInstrumented when the configuration element is present and
/// ManifestMismatch when the manifest does not describe the document.
[[nodiscard]] std::string instrument(std::string_view annotated_html, const PageManifest& manifest,
                                     std::string_view endpoint_url);

/// The `<script type="application/json" id="segtrack-config">` element.
[[nodiscard]] std::string config_element(std::string_view endpoint_url, std::string_view page_url);

[[nodiscard]] std::string manifest_to_json(const PageManifest& manifest);

/// Throws Error(MalformedManifest).
[[nodiscard]] PageManifest manifest_from_json(std::string_view text);

}  // namespace segtrack
