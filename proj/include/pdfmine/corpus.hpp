#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace pdfmine::corpus {

/// Structural facts about one PDF, gathered without rendering.
struct PdfProbe {
  std::string doc_id;
  std::string source_uri;
  int page_count = 0;
  int first_page_image_count = 0;
  bool parse_ok = false;
};

enum class RejectionReason { TooManyPages, NoImages, ParseFailure, Duplicate };

std::string_view to_string(RejectionReason reason);
std::optional<RejectionReason> rejection_reason_from_string(std::string_view text);

struct SelectionDecision {
  std::string doc_id;
  bool accepted = false;
  std::optional<RejectionReason> rejection_reason;
  int selected_page_index = 0;
};

struct SelectionPolicy {
  int max_pages = 5;
  int min_first_page_images = 1;

  /// Throws Error(ConfigInvalid) when a bound is out of range.
  void validate() const;
};

/// Content hash used as the document identifier (hex SHA-256).
std::string dedup_key(std::string_view bytes);

/// Counts pages and the distinct image XObjects reachable from the first page's
/// resources (including nested form XObjects). Never throws; failures set parse_ok=false.
PdfProbe probe_pdf(std::string_view bytes);

/// Applies the policy. Rejection precedence: ParseFailure, TooManyPages, NoImages.
SelectionDecision select(const PdfProbe& probe, const SelectionPolicy& policy);

SelectionDecision duplicate_of(const PdfProbe& probe);

struct SourceEntry {
  std::string uri;
  std::filesystem::path path;
};

/// A directory is walked recursively for *.pdf files (sorted by path); any other
/// file is read as a manifest with one path or file:// URI per line. Relative
/// manifest entries resolve against the manifest's directory; '#' starts a comment.
std::vector<SourceEntry> enumerate_sources(const std::filesystem::path& input);

/// Selection log record {doc_id, source_uri, accepted, rejection_reason}.
nlohmann::ordered_json selection_record(const PdfProbe& probe, const SelectionDecision& decision);

}  // namespace pdfmine::corpus
