#include "pdfmine/layout_types.hpp"

#include <algorithm>

#include "pdfmine/error.hpp"

namespace pdfmine::extract {

double iou(const BBox& a, const BBox& b) {
  const int ix0 = std::max(a.x0, b.x0), iy0 = std::max(a.y0, b.y0);
  const int ix1 = std::min(a.x1, b.x1), iy1 = std::min(a.y1, b.y1);
  if (ix0 >= ix1 || iy0 >= iy1) return 0.0;
  const double inter = static_cast<double>(ix1 - ix0) * (iy1 - iy0);
  const double uni = static_cast<double>(a.area()) + static_cast<double>(b.area()) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::string_view to_string(RegionKind kind) {
  return kind == RegionKind::ImageRegion ? "ImageRegion" : "TextRegion";
}

nlohmann::ordered_json to_json(const Region& region) {
  nlohmann::ordered_json j;
  j["region_id"] = region.region_id;
  j["kind"] = to_string(region.kind);
  j["bbox"] = {region.bbox.x0, region.bbox.y0, region.bbox.x1, region.bbox.y1};
  j["confidence"] = region.confidence;
  j["reading_order_index"] = region.reading_order_index;
  return j;
}

Region region_from_json(const nlohmann::json& j) {
  try {
    Region r;
    r.region_id = j.at("region_id").get<int>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "ImageRegion") {
      r.kind = RegionKind::ImageRegion;
    } else if (kind == "TextRegion") {
      r.kind = RegionKind::TextRegion;
    } else {
      throw Error(ErrorCode::CorruptCheckpoint, "unknown region kind " + kind);
    }
    const auto& b = j.at("bbox");
    r.bbox = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
    r.confidence = j.at("confidence").get<double>();
    r.reading_order_index = j.at("reading_order_index").get<int>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptCheckpoint, std::string("region record: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const TextBlock& block) {
  nlohmann::ordered_json j;
  j["region_id"] = block.region_id;
  j["content"] = block.content;
  j["recognizer_confidence"] = block.recognizer_confidence;
  j["target_script_ratio"] = block.target_script_ratio;
  return j;
}

TextBlock text_block_from_json(const nlohmann::json& j) {
  try {
    TextBlock b;
    b.region_id = j.at("region_id").get<int>();
    b.content = j.at("content").get<std::string>();
    b.recognizer_confidence = j.at("recognizer_confidence").get<double>();
    b.target_script_ratio = j.at("target_script_ratio").get<double>();
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptCheckpoint, std::string("text block record: ") + e.what());
  }
}

}  // namespace pdfmine::extract
