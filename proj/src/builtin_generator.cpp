#include <cmath>

#include "pdfmine/builtin_providers.hpp"
#include "pdfmine/error.hpp"
#include "pdfmine/util/utf8.hpp"

namespace pdfmine {

namespace {

struct ImageFacts {
  std::string colour = "白";
  int width = 0;
  int height = 0;
  double brightness = 1.0;
};

ImageFacts facts_of(const RgbImage* image) {
  ImageFacts f;
  if (!image || image->empty()) return f;
  f.colour = dominant_colour_name(*image);
  f.width = image->width;
  f.height = image->height;
  double sum = 0;
  for (std::size_t i = 0; i + 2 < image->pixels.size(); i += 3) {
    sum += 0.299 * image->pixels[i] + 0.587 * image->pixels[i + 1] + 0.114 * image->pixels[i + 2];
  }
  f.brightness = sum / (255.0 * image->width * image->height);
  return f;
}

std::string orientation(const ImageFacts& f) {
  if (f.width > f.height) return "横長";
  if (f.width < f.height) return "縦長";
  return "正方形";
}

std::string context_of(const std::string& prompt) {
  const std::string label = "描述: ";
  const auto at = prompt.find(label);
  if (at == std::string::npos) return {};
  const auto end = prompt.find("\n\n", at);
  return prompt.substr(at + label.size(), end == std::string::npos ? std::string::npos : end - at - label.size());
}

std::string first_chars(const std::string& text, std::size_t n) {
  auto cps = util::utf8_decode(text);
  if (cps.size() > n) cps.resize(n);
  return util::utf8_encode(cps);
}

std::string instruction_reply(const ImageFacts& f, const std::string& context, int pairs) {
  const std::string size = std::to_string(f.width) + "×" + std::to_string(f.height);
  std::vector<std::pair<std::string, std::string>> qa = {
      {"この画像で最も目立つ色は何ですか？", "この画像では" + f.colour + "が最も目立っています。"},
      {"この画像は縦長ですか、それとも横長ですか？",
       "この画像は" + orientation(f) + "で、大きさは" + size + "ピクセルです。"},
      {"この画像はどのような資料に含まれていそうですか？",
       context.empty() ? "文書の内容を補足する図として掲載されているようです。"
                       : "「" + first_chars(context, 40) + "」に関する資料の一部として掲載されているようです。"},
      {"画像全体の明るさはどうですか？",
       f.brightness > 0.6 ? "全体的に明るい画像です。" : (f.brightness > 0.3 ? "中程度の明るさの画像です。" : "全体的に暗い画像です。")},
      {"この画像の色合いについて詳しく説明してください。",
       f.colour + "を基調とした色合いです。\n\n" "配色は落ち着いており、文書の図として読みやすい印象を与えます。"},
  };
  std::string out;
  for (int i = 0; i < std::max(pairs, 1); ++i) {
    const auto& [q, a] = qa[static_cast<std::size_t>(i) % qa.size()];
    if (!out.empty()) out += "\n\n";
    out += "質問: " + q;
    if (i >= static_cast<int>(qa.size())) out += "（" + std::to_string(i / qa.size() + 1) + "回目）";
    out += "\n\n回答: " + a;
  }
  return out;
}

}  // namespace

std::string BuiltinGenerator::generate(const GenerationRequest& request) {
  const ImageFacts f = facts_of(request.image);
  switch (request.task) {
    case GenerationTask::SafetyClassification:
      return R"({"nsfw": false, "pii": false, "reasons": []})";
    case GenerationTask::PdfStyle:
      return "本資料では" + f.colour + "を基調とした図を用いて、本文の内容を補足している。";
    case GenerationTask::Instruction:
      return instruction_reply(f, context_of(request.prompt), request.qa_pairs);
    case GenerationTask::Translate: {
      const auto at = request.prompt.find("\n\n");
      if (at == std::string::npos) throw Error(ErrorCode::ProviderMalformedReply, "translate prompt has no payload");
      return request.prompt.substr(at + 2);
    }
  }
  return {};
}

}  // namespace pdfmine
