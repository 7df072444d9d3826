#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pdfmine/pdf/object.hpp"

namespace pdfmine::pdf {

struct FilterStep {
  std::string name;
  const Dict* params = nullptr;
};

struct DecodeResult {
  std::string data;
  /// First image codec filter that was not applied (DCTDecode, JPXDecode, ...), empty if all applied.
  std::string pending_codec;
  const Dict* pending_params = nullptr;
};

/// Applies the generic filters in order and stops at the first image codec.
/// Throws Error(ParseFailure) for corrupt data or unknown filters.
DecodeResult apply_filters(std::string_view raw, const std::vector<FilterStep>& steps);

std::string flate_decode(std::string_view data);
std::string flate_encode(std::string_view data, int level = 6);

}  // namespace pdfmine::pdf
