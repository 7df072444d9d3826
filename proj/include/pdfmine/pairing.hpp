#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pdfmine/image.hpp"
#include "pdfmine/layout_types.hpp"
#include "pdfmine/providers.hpp"

namespace pdfmine::pairing {

struct Embedding {
  std::vector<double> vector;
  int dim() const { return static_cast<int>(vector.size()); }
};

/// Throws EmptyInput for blank text, DimensionMismatch when the provider's vector
/// length differs from its declared dimension, ProviderMalformedReply for a zero or non-finite vector.
Embedding embed_text(std::string_view text, EmbeddingProvider& embedder);
Embedding embed_image(const RgbImage& image, EmbeddingProvider& embedder);

/// Clamped to [-1, 1]. Throws DimensionMismatch or ZeroVector.
double cosine_similarity(const Embedding& a, const Embedding& b);

struct PairingStrategy {
  enum class Kind { Top1, TopK, Neighbor };
  Kind kind = Kind::Top1;
  int k = 1;

  static PairingStrategy top1() { return {Kind::Top1, 1}; }
  /// Throws ConfigInvalid for k < 1.
  static PairingStrategy top_k(int k);
  static PairingStrategy neighbor() { return {Kind::Neighbor, 1}; }

  friend bool operator==(const PairingStrategy&, const PairingStrategy&) = default;
};

/// "Top1", "TopK(3)", "Neighbor".
std::string to_string(const PairingStrategy& strategy);
/// Accepts the forms above plus "top1", "top3", "topk:5" and "neighbor". Throws ConfigInvalid.
PairingStrategy parse_strategy(std::string_view text);

struct Candidate {
  extract::TextBlock text;
  int reading_order_index = 0;
  Embedding embedding;
};

struct PairedText {
  extract::TextBlock text;
  int reading_order_index = 0;
  double similarity = 0.0;
};

struct PairedSample {
  int image_region_id = 0;
  std::string image_asset;
  std::vector<PairedText> texts;
  PairingStrategy strategy;
};

/// Selects texts for one image. Candidates are taken in reading order; similarity
/// ties go to the lowest reading_order_index. Throws NoCandidates for an empty list.
std::vector<PairedText> pair(const Embedding& image, const std::vector<Candidate>& candidates,
                             const PairingStrategy& strategy);

/// {doc_id, image_asset, strategy, texts:[{content, similarity, reading_order_index}]}
nlohmann::ordered_json pair_record(std::string_view doc_id, const PairedSample& sample);

}  // namespace pdfmine::pairing
