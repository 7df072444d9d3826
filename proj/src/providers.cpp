#include "pdfmine/providers.hpp"

namespace pdfmine {

std::string_view to_string(GenerationTask task) {
  switch (task) {
    case GenerationTask::PdfStyle: return "pdf_style";
    case GenerationTask::Instruction: return "instruction";
    case GenerationTask::Translate: return "translate";
    case GenerationTask::SafetyClassification: return "safety";
  }
  return "instruction";
}

}  // namespace pdfmine
