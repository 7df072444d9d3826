#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pdfmine/pdf/filters.hpp"
#include "pdfmine/pdf/object.hpp"

namespace pdfmine::pdf {

struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

/// A leaf of the page tree with inherited attributes already applied.
struct Page {
  Dict dict;
  Rect media_box;
  int rotate = 0;  // normalized to 0, 90, 180 or 270
  Dict resources;
};

/// Parsed PDF file. Objects are located by scanning for "n g obj" headers rather
/// than trusting the cross-reference table, which makes damaged files loadable.
class Document {
 public:
  /// Throws Error(ParseFailure) when no catalog or page tree can be found.
  static Document load(std::string bytes);

  /// Follows indirect references (bounded depth); unknown refs resolve to null.
  const Object& resolve(const Object& obj) const;
  const Object& get(Ref ref) const;
  /// Resolved dictionary entry, nullptr when missing or null.
  const Object* lookup(const Dict& dict, std::string_view key) const;

  /// Applies the stream's filters up to the first image codec.
  DecodeResult decode(const Stream& stream) const;
  /// Fully decodes a stream, throwing Error(ParseFailure) if an image codec remains.
  std::string decode_all(const Stream& stream) const;

  int page_count() const { return static_cast<int>(pages_.size()); }
  const Page& page(int index) const;
  const std::string& bytes() const { return bytes_; }
  bool encrypted() const { return encrypted_; }

 private:
  void scan_objects();
  void load_object_streams();
  void locate_catalog();
  void build_page_tree();

  std::string bytes_;
  std::unordered_map<int, Object> objects_;
  Dict trailer_;
  Object catalog_;
  std::vector<Page> pages_;
  bool encrypted_ = false;
};

}  // namespace pdfmine::pdf
