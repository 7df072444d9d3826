#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdfmine/image.hpp"
#include "pdfmine/layout_types.hpp"

namespace pdfmine {

/// Detects typed regions on a rendered page.
class LayoutProvider {
 public:
  virtual ~LayoutProvider() = default;
  virtual std::string id() const = 0;
  virtual std::vector<extract::RawRegion> analyze(const extract::PageImage& page) = 0;
};

/// Recognizes the text inside each region; returns one entry per region, in order.
class TextRecognizer {
 public:
  virtual ~TextRecognizer() = default;
  virtual std::string id() const = 0;
  virtual std::vector<extract::Recognition> recognize(const extract::PageImage& page,
                                                      std::span<const extract::Region> regions) = 0;
};

enum class Modality { Image, Text };

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual int dim() const = 0;
  virtual std::vector<double> embed_text(std::string_view text) = 0;
  virtual std::vector<double> embed_image(const RgbImage& image) = 0;
};

enum class GenerationTask { PdfStyle, Instruction, Translate, SafetyClassification };
std::string_view to_string(GenerationTask task);

struct GenerationRequest {
  GenerationTask task = GenerationTask::Instruction;
  std::string prompt;
  const RgbImage* image = nullptr;
  /// Requested question/answer pairs for instruction generation.
  int qa_pairs = 3;
};

/// Multimodal text generation (instruction data, PDF-style text, translation, safety classification).
class ContentGenerator {
 public:
  virtual ~ContentGenerator() = default;
  virtual std::string id() const = 0;
  virtual std::string generate(const GenerationRequest& request) = 0;
};

}  // namespace pdfmine
