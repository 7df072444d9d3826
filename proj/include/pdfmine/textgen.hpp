#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pdfmine/image.hpp"
#include "pdfmine/providers.hpp"

namespace pdfmine::textgen {

enum class TemplateName { PdfStyle, Instruction, Translate };
std::string_view to_string(TemplateName name);

struct PromptTemplate {
  TemplateName name;
  std::string_view version;
  std::string_view body;
};

const PromptTemplate& prompt_template(TemplateName name);
/// Hex SHA-256 of the template body.
std::string prompt_hash(TemplateName name);

enum class ContextMode { ImageOnly, ImagePlusPairedText, ImagePlusPdfStyleText };
std::string_view to_string(ContextMode mode);
/// Throws ConfigInvalid.
ContextMode parse_context_mode(std::string_view text);

/// Instruction prompt; a context block "描述: ..." goes in front of the
/// conversation-design paragraph. Without context the template is returned unchanged.
std::string render_instruction_prompt(const std::optional<std::string>& context);

inline constexpr std::string_view kQuestionPrefix = "質問:";
inline constexpr std::string_view kAnswerPrefix = "回答:";

enum class Speaker { Human, Assistant };

struct Turn {
  Speaker speaker = Speaker::Human;
  std::string text;
  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Conversation {
  std::vector<Turn> turns;
  friend bool operator==(const Conversation&, const Conversation&) = default;
};

/// Throws MalformedConversation unless turns are non-empty, alternate starting with
/// the human, come in pairs, and each text is in canonical paragraph form
/// (trimmed paragraphs joined by one blank line; questions are a single paragraph).
void validate(const Conversation& conversation);

/// Blank lines separate segments. A segment starting with 質問: is a question,
/// 回答: an answer; an unprefixed segment continues the preceding answer.
Conversation parse_conversation(std::string_view raw);

/// Inverse of parse_conversation for valid conversations.
std::string render(const Conversation& conversation);

nlohmann::ordered_json to_json(const Conversation& conversation);
Conversation conversation_from_json(const nlohmann::json& j);

/// Counts sentences ending in 。！？ or .!? (a run of terminators ends one sentence;
/// a period between digits does not), plus any unterminated tail.
int count_sentences(std::string_view text);

struct GenerationAudit {
  std::string task;
  std::string prompt_hash;
  std::string provider_id;
  double latency_ms = 0.0;
  int retries = 0;
};

nlohmann::ordered_json to_json(const GenerationAudit& audit);

struct PdfStyleText {
  std::string text;
  int sentences = 0;
  bool over_length = false;
  std::string prompt_version;
};

/// Throws EmptyReply when the generator returns only whitespace.
PdfStyleText gen_pdf_style(const RgbImage& image, ContentGenerator& generator, GenerationAudit* audit = nullptr);

/// Context must be present exactly when mode != ImageOnly (InvariantViolation otherwise).
/// A malformed reply is retried once with the same prompt.
Conversation gen_instructions(const RgbImage& image, const std::optional<std::string>& context, ContextMode mode,
                              ContentGenerator& generator, int qa_pairs = 3, GenerationAudit* audit = nullptr);

/// Number of "<image>" occurrences.
int count_image_tokens(std::string_view text);

/// Translates the value fields of a JSON array of {from, value} objects.
/// Throws InvalidInputJson, InvalidOutputJson or TokenLost.
nlohmann::json translate_samples(std::string_view records_json, ContentGenerator& generator,
                                 GenerationAudit* audit = nullptr);

}  // namespace pdfmine::textgen
