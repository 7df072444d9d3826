#include "pdfmine/textgen.hpp"

#include <chrono>

#include "pdfmine/error.hpp"
#include "pdfmine/util/hash.hpp"
#include "pdfmine/util/utf8.hpp"

namespace pdfmine::textgen {

namespace {

constexpr std::string_view kContextLabel = "描述: ";
constexpr std::string_view kDesignAnchor = "Design a conversation";

std::string normalize_newlines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      out += '\n';
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      out += text[i];
    }
  }
  return out;
}

/// Splits on whitespace-only lines; every paragraph is trimmed.
std::vector<std::string> paragraphs(std::string_view text) {
  const std::string norm = normalize_newlines(text);
  std::vector<std::string> out;
  std::string current;
  std::size_t pos = 0;
  while (pos <= norm.size()) {
    std::size_t nl = norm.find('\n', pos);
    if (nl == std::string::npos) nl = norm.size();
    const std::string_view line(norm.data() + pos, nl - pos);
    if (util::trim(line).empty()) {
      if (!util::trim(current).empty()) out.push_back(util::trim(current));
      current.clear();
    } else {
      if (!current.empty()) current += '\n';
      current += line;
    }
    pos = nl + 1;
  }
  if (!util::trim(current).empty()) out.push_back(util::trim(current));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

[[noreturn]] void malformed(const std::string& why) { throw Error(ErrorCode::MalformedConversation, why); }

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

std::string_view to_string(TemplateName name) {
  switch (name) {
    case TemplateName::PdfStyle: return "PdfStyle";
    case TemplateName::Instruction: return "Instruction";
    case TemplateName::Translate: return "Translate";
  }
  return "Unknown";
}

std::string prompt_hash(TemplateName name) { return util::sha256_hex(prompt_template(name).body); }

std::string_view to_string(ContextMode mode) {
  switch (mode) {
    case ContextMode::ImageOnly: return "ImageOnly";
    case ContextMode::ImagePlusPairedText: return "ImagePlusPairedText";
    case ContextMode::ImagePlusPdfStyleText: return "ImagePlusPdfStyleText";
  }
  return "ImageOnly";
}

ContextMode parse_context_mode(std::string_view text) {
  for (auto m : {ContextMode::ImageOnly, ContextMode::ImagePlusPairedText, ContextMode::ImagePlusPdfStyleText}) {
    if (to_string(m) == text) return m;
  }
  if (text == "image_only") return ContextMode::ImageOnly;
  if (text == "paired_text") return ContextMode::ImagePlusPairedText;
  if (text == "pdf_style_text") return ContextMode::ImagePlusPdfStyleText;
  throw Error(ErrorCode::ConfigInvalid, "unknown context mode '" + std::string(text) + "'");
}

std::string render_instruction_prompt(const std::optional<std::string>& context) {
  const std::string_view body = prompt_template(TemplateName::Instruction).body;
  if (!context) return std::string(body);
  const std::size_t at = body.find(kDesignAnchor);
  std::string out(body.substr(0, at));
  out += kContextLabel;
  out += *context;
  out += "\n\n";
  out += body.substr(at);
  return out;
}

void validate(const Conversation& conversation) {
  const auto& turns = conversation.turns;
  if (turns.empty()) malformed("conversation has no turns");
  if (turns.size() % 2 != 0) malformed("conversation ends with an unanswered question");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const Turn& t = turns[i];
    const Speaker expected = i % 2 == 0 ? Speaker::Human : Speaker::Assistant;
    if (t.speaker != expected) malformed("speakers do not alternate at turn " + std::to_string(i));
    const auto paras = paragraphs(t.text);
    if (paras.empty() || join(paras, "\n\n") != t.text) malformed("turn " + std::to_string(i) + " is not canonical");
    if (t.speaker == Speaker::Human && paras.size() != 1) malformed("question spans several paragraphs");
    for (const auto& p : paras) {
      if (starts_with(p, kQuestionPrefix) || starts_with(p, kAnswerPrefix)) {
        malformed("turn " + std::to_string(i) + " contains a speaker prefix");
      }
    }
  }
}

Conversation parse_conversation(std::string_view raw) {
  Conversation conv;
  for (const auto& para : paragraphs(raw)) {
    if (starts_with(para, kQuestionPrefix)) {
      conv.turns.push_back({Speaker::Human, util::trim(std::string_view(para).substr(kQuestionPrefix.size()))});
    } else if (starts_with(para, kAnswerPrefix)) {
      conv.turns.push_back({Speaker::Assistant, util::trim(std::string_view(para).substr(kAnswerPrefix.size()))});
    } else if (!conv.turns.empty() && conv.turns.back().speaker == Speaker::Assistant &&
               !conv.turns.back().text.empty()) {
      conv.turns.back().text += "\n\n" + para;
    } else {
      malformed("segment without a 質問:/回答: prefix");
    }
  }
  if (conv.turns.empty()) malformed("no question/answer pairs");
  for (const auto& t : conv.turns) {
    if (t.text.empty()) malformed("empty turn");
  }
  validate(conv);
  return conv;
}

std::string render(const Conversation& conversation) {
  validate(conversation);
  std::string out;
  for (const auto& t : conversation.turns) {
    if (!out.empty()) out += "\n\n";
    out += t.speaker == Speaker::Human ? kQuestionPrefix : kAnswerPrefix;
    out += ' ';
    out += t.text;
  }
  return out;
}

nlohmann::ordered_json to_json(const Conversation& conversation) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : conversation.turns) {
    nlohmann::ordered_json j;
    j["speaker"] = t.speaker == Speaker::Human ? "human" : "assistant";
    j["text"] = t.text;
    arr.push_back(std::move(j));
  }
  return arr;
}

Conversation conversation_from_json(const nlohmann::json& j) {
  Conversation c;
  try {
    for (const auto& t : j) {
      const auto speaker = t.at("speaker").get<std::string>();
      if (speaker != "human" && speaker != "assistant") malformed("unknown speaker " + speaker);
      c.turns.push_back({speaker == "human" ? Speaker::Human : Speaker::Assistant, t.at("text").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("conversation record: ") + e.what());
  }
  return c;
}

int count_sentences(std::string_view text) {
  const auto cps = util::utf8_decode(util::trim(text));
  auto terminator = [&](std::size_t i) {
    const char32_t c = cps[i];
    if (c == U'。' || c == U'！' || c == U'？' || c == U'!' || c == U'?') return true;
    if (c != U'.') return false;
    const bool digit_before = i > 0 && cps[i - 1] >= U'0' && cps[i - 1] <= U'9';
    const bool digit_after = i + 1 < cps.size() && cps[i + 1] >= U'0' && cps[i + 1] <= U'9';
    return !(digit_before && digit_after);
  };
  int count = 0;
  bool pending = false;  // content seen since the last terminator
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (terminator(i)) {
      if (pending) ++count;
      pending = false;
    } else if (!util::is_space(cps[i]) && cps[i] != U'」' && cps[i] != U'）' && cps[i] != U')' && cps[i] != U'"') {
      pending = true;
    }
  }
  return count + (pending ? 1 : 0);
}

nlohmann::ordered_json to_json(const GenerationAudit& audit) {
  nlohmann::ordered_json j;
  j["task"] = audit.task;
  j["prompt_hash"] = audit.prompt_hash;
  j["provider_id"] = audit.provider_id;
  j["latency_ms"] = audit.latency_ms;
  j["retries"] = audit.retries;
  return j;
}

PdfStyleText gen_pdf_style(const RgbImage& image, ContentGenerator& generator, GenerationAudit* audit) {
  const PromptTemplate& tpl = prompt_template(TemplateName::PdfStyle);
  GenerationRequest req;
  req.task = GenerationTask::PdfStyle;
  req.prompt = std::string(tpl.body);
  req.image = &image;
  const auto start = std::chrono::steady_clock::now();
  const std::string reply = generator.generate(req);
  if (audit) *audit = {"PdfStyle", prompt_hash(TemplateName::PdfStyle), generator.id(), elapsed_ms(start), 0};
  PdfStyleText out;
  out.text = util::trim(reply);
  if (out.text.empty()) throw Error(ErrorCode::EmptyReply, generator.id() + " returned an empty reply");
  out.sentences = count_sentences(out.text);
  out.over_length = out.sentences > 2;
  out.prompt_version = std::string(tpl.version);
  return out;
}

Conversation gen_instructions(const RgbImage& image, const std::optional<std::string>& context, ContextMode mode,
                              ContentGenerator& generator, int qa_pairs, GenerationAudit* audit) {
  if ((mode == ContextMode::ImageOnly) == context.has_value()) {
    throw Error(ErrorCode::InvariantViolation, "context must be given exactly when the mode uses one");
  }
  GenerationRequest req;
  req.task = GenerationTask::Instruction;
  req.prompt = render_instruction_prompt(context);
  req.image = &image;
  req.qa_pairs = qa_pairs;
  const auto start = std::chrono::steady_clock::now();
  GenerationAudit local{"Instruction", prompt_hash(TemplateName::Instruction), generator.id(), 0, 0};
  for (int attempt = 0;; ++attempt) {
    try {
      Conversation conv = parse_conversation(generator.generate(req));
      local.latency_ms = elapsed_ms(start);
      if (audit) *audit = local;
      return conv;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MalformedConversation || attempt >= 1) {
        local.latency_ms = elapsed_ms(start);
        if (audit) *audit = local;
        throw;
      }
      ++local.retries;
    }
  }
}

int count_image_tokens(std::string_view text) {
  int n = 0;
  for (std::size_t pos = text.find("<image>"); pos != std::string_view::npos; pos = text.find("<image>", pos + 7)) ++n;
  return n;
}

nlohmann::json translate_samples(std::string_view records_json, ContentGenerator& generator, GenerationAudit* audit) {
  nlohmann::json input;
  try {
    input = nlohmann::json::parse(records_json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInputJson, e.what());
  }
  auto well_formed = [](const nlohmann::json& arr) {
    if (!arr.is_array()) return false;
    for (const auto& r : arr) {
      if (!r.is_object() || !r.contains("from") || !r.contains("value") || !r["from"].is_string() ||
          !r["value"].is_string()) {
        return false;
      }
    }
    return true;
  };
  if (!well_formed(input)) throw Error(ErrorCode::InvalidInputJson, "expected an array of {from, value} objects");

  GenerationRequest req;
  req.task = GenerationTask::Translate;
  req.prompt = std::string(prompt_template(TemplateName::Translate).body) + "\n\n" + input.dump(-1, ' ', false);
  const auto start = std::chrono::steady_clock::now();
  const std::string reply = generator.generate(req);
  if (audit) *audit = {"Translate", prompt_hash(TemplateName::Translate), generator.id(), elapsed_ms(start), 0};

  nlohmann::json output;
  try {
    output = nlohmann::json::parse(reply);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidOutputJson, e.what());
  }
  if (!well_formed(output)) throw Error(ErrorCode::InvalidOutputJson, "reply is not an array of {from, value} objects");
  if (output.size() != input.size()) {
    throw Error(ErrorCode::InvalidOutputJson, "reply has " + std::to_string(output.size()) + " records, expected " +
                                                  std::to_string(input.size()));
  }
  for (std::size_t i = 0; i < input.size(); ++i) {
    if (output[i]["from"] != input[i]["from"]) {
      throw Error(ErrorCode::InvalidOutputJson, "from field changed at record " + std::to_string(i));
    }
    const auto in = input[i]["value"].get<std::string>();
    const auto out = output[i]["value"].get<std::string>();
    if (count_image_tokens(in) != count_image_tokens(out)) {
      throw Error(ErrorCode::TokenLost, "<image> count changed at record " + std::to_string(i));
    }
    if (starts_with(in, "<image>\n") && !starts_with(out, "<image>\n")) {
      throw Error(ErrorCode::TokenLost, "<image> prefix lost at record " + std::to_string(i));
    }
  }
  return output;
}

}  // namespace pdfmine::textgen
