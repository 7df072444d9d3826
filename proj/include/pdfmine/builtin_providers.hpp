#pragma once

#include <cstdint>
#include <string>

#include "pdfmine/providers.hpp"

namespace pdfmine {

/// Deterministic hashed bag-of-characters embedder. Text uses character unigrams
/// and bigrams; images use a colour histogram, a coarse luminance grid and the
/// name of their dominant colour, hashed into the same space.
class BuiltinEmbedder final : public EmbeddingProvider {
 public:
  explicit BuiltinEmbedder(int dim = 64, std::uint64_t seed = 0x5eed);
  std::string id() const override;
  int dim() const override { return dim_; }
  std::vector<double> embed_text(std::string_view text) override;
  std::vector<double> embed_image(const RgbImage& image) override;

 private:
  void add_feature(std::vector<double>& v, std::string_view feature, double weight) const;
  void finish(std::vector<double>& v, std::string_view fallback) const;

  int dim_;
  std::uint64_t seed_;
};

/// Deterministic offline generator. Replies are derived from simple image
/// statistics so the pipeline can run end to end without a model server:
/// a clean safety verdict, a one-sentence PDF-style passage, the requested number
/// of 質問/回答 pairs, and translation as the identity.
class BuiltinGenerator final : public ContentGenerator {
 public:
  std::string id() const override { return "builtin-gen/1"; }
  std::string generate(const GenerationRequest& request) override;
};

/// Japanese name of the most common coarse colour in the image (e.g. "赤", "青").
std::string dominant_colour_name(const RgbImage& image);

}  // namespace pdfmine
