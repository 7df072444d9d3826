#include "pdfmine/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "pdfmine/error.hpp"
#include "pdfmine/pdf/document.hpp"
#include "pdfmine/util/hash.hpp"
#include "pdfmine/util/utf8.hpp"

namespace fs = std::filesystem;

namespace pdfmine::corpus {

std::string_view to_string(RejectionReason reason) {
  switch (reason) {
    case RejectionReason::TooManyPages: return "TooManyPages";
    case RejectionReason::NoImages: return "NoImages";
    case RejectionReason::ParseFailure: return "ParseFailure";
    case RejectionReason::Duplicate: return "Duplicate";
  }
  return "Unknown";
}

std::optional<RejectionReason> rejection_reason_from_string(std::string_view text) {
  for (auto r : {RejectionReason::TooManyPages, RejectionReason::NoImages, RejectionReason::ParseFailure,
                 RejectionReason::Duplicate}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

void SelectionPolicy::validate() const {
  if (max_pages < 1) throw Error(ErrorCode::ConfigInvalid, "max_pages must be >= 1");
  if (min_first_page_images < 0) throw Error(ErrorCode::ConfigInvalid, "min_first_page_images must be >= 0");
}

std::string dedup_key(std::string_view bytes) { return util::sha256_hex(bytes); }

namespace {

void collect_images(const pdf::Document& doc, const pdf::Dict& resources, std::set<const pdf::Stream*>& images,
                    std::set<const pdf::Stream*>& forms, int depth) {
  if (depth > 12) return;
  const pdf::Object* xobjects = doc.lookup(resources, "XObject");
  if (!xobjects || !xobjects->dict()) return;
  for (const auto& [name, entry] : *xobjects->dict()) {
    const pdf::Stream* s = doc.resolve(entry).stream();
    if (!s) continue;
    const pdf::Object* subtype = doc.lookup(s->dict, "Subtype");
    if (!subtype) continue;
    if (subtype->is_name("Image")) {
      images.insert(s);
    } else if (subtype->is_name("Form") && forms.insert(s).second) {
      const pdf::Object* res = doc.lookup(s->dict, "Resources");
      if (res && res->dict()) collect_images(doc, *res->dict(), images, forms, depth + 1);
    }
  }
}

}  // namespace

PdfProbe probe_pdf(std::string_view bytes) {
  PdfProbe probe;
  probe.doc_id = dedup_key(bytes);
  try {
    const pdf::Document doc = pdf::Document::load(std::string(bytes));
    const int pages = doc.page_count();
    int images = 0;
    if (pages > 0) {
      std::set<const pdf::Stream*> found;
      std::set<const pdf::Stream*> forms;
      collect_images(doc, doc.page(0).resources, found, forms, 0);
      images = static_cast<int>(found.size());
    }
    probe.page_count = pages;
    probe.first_page_image_count = images;
    probe.parse_ok = true;
  } catch (const std::exception&) {
    probe.page_count = 0;
    probe.first_page_image_count = 0;
    probe.parse_ok = false;
  }
  return probe;
}

SelectionDecision select(const PdfProbe& probe, const SelectionPolicy& policy) {
  SelectionDecision d;
  d.doc_id = probe.doc_id;
  if (!probe.parse_ok) {
    d.rejection_reason = RejectionReason::ParseFailure;
  } else if (probe.page_count > policy.max_pages) {
    d.rejection_reason = RejectionReason::TooManyPages;
  } else if (probe.first_page_image_count < policy.min_first_page_images) {
    d.rejection_reason = RejectionReason::NoImages;
  }
  d.accepted = !d.rejection_reason.has_value();
  d.selected_page_index = 0;
  return d;
}

SelectionDecision duplicate_of(const PdfProbe& probe) {
  SelectionDecision d;
  d.doc_id = probe.doc_id;
  d.accepted = false;
  d.rejection_reason = RejectionReason::Duplicate;
  return d;
}

std::vector<SourceEntry> enumerate_sources(const fs::path& input) {
  std::error_code ec;
  std::vector<SourceEntry> out;
  if (fs::is_directory(input, ec)) {
    for (const auto& entry : fs::recursive_directory_iterator(input, fs::directory_options::skip_permission_denied)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      if (ext != ".pdf") continue;
      out.push_back({entry.path().lexically_relative(input).generic_string(), entry.path()});
    }
    std::sort(out.begin(), out.end(), [](const SourceEntry& a, const SourceEntry& b) { return a.uri < b.uri; });
    return out;
  }
  std::ifstream in(input);
  if (!in) throw Error(ErrorCode::ConfigInvalid, "input not found: " + input.string());
  const fs::path base = input.parent_path();
  std::string line;
  while (std::getline(in, line)) {
    const std::string entry = util::trim(line);
    if (entry.empty() || entry[0] == '#') continue;
    fs::path p = entry.rfind("file://", 0) == 0 ? fs::path(entry.substr(7)) : fs::path(entry);
    if (p.is_relative()) p = base / p;
    out.push_back({entry, p});
  }
  return out;
}

nlohmann::ordered_json selection_record(const PdfProbe& probe, const SelectionDecision& decision) {
  nlohmann::ordered_json j;
  j["doc_id"] = decision.doc_id;
  j["source_uri"] = probe.source_uri;
  j["accepted"] = decision.accepted;
  j["rejection_reason"] =
      decision.rejection_reason ? nlohmann::ordered_json(to_string(*decision.rejection_reason)) : nlohmann::ordered_json();
  return j;
}

}  // namespace pdfmine::corpus
