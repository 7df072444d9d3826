#include "pdfmine/textgen.hpp"

namespace pdfmine::textgen {

namespace {

constexpr std::string_view kPdfStyle = R"(You are an AI visual assistant, and you are seeing a single image. Generate a passage that resembles text commonly found in PDF documents and is relevant to the given image. The provided image is extracted from a PDF, but no additional context, such as the document’s text or structure, is available.
PDF-style text generally has the following characteristics:
1. No explicit captions or minimal captions: Instead of directly describing the image, related text may naturally integrate into the document’s content.
2. Indirect descriptions: The text does not explicitly reference the image but provides supporting information that the image complements.

To keep the text concise, generate only 1 to 2 sentences per image, ensuring it aligns with common PDF writing styles.
You must respond in Japanese.)";

constexpr std::string_view kInstruction = R"(You are an AI visual assistant, and you are seeing a single image. What you see are provided within several sentences, describing the same image you are looking at. Answer all questions as you are seeing the image.

Design a conversation between you and a person asking about this photo. The answers should be in a tone that a visual AI assistant is seeing the image and answering the question.
Ask diverse questions and give corresponding answers.

Include questions asking about the visual content of the image, including the object types, counting the objects, object actions, object locations, relative positions between objects, etc. Only include questions that have definite answers:
(1) one can see the content in the image that the question asks about and can answer confidently;
(2) one can determine confidently from the image that it is not in the image.
Do not ask any question that cannot be answered confidently.

Also include complex questions that are relevant to the content in the image, for example, asking about background knowledge of the objects in the image, asking to discuss about events happening in the image, etc. Again, do not ask about uncertain details.
Provide detailed answers when answering complex questions. For example, give detailed examples or reasoning steps to make the content more convincing and well-organized.  You can include multiple paragraphs if necessary.

You must use Japanese all the time.
When creating a question, start with '質問:'.
When creating a response, start with '回答:'.
After finishing a question or response, always separate them with '\n\n'.)";

constexpr std::string_view kTranslate = R"(Given a JSON array of objects, each with a 'from' and 'value' field, translate only the English text inside the 'value' field into Japanese. Keep the special token <image>\n in the 'value' field unchanged. Do not change the overall structure of the JSON. Translate all English content in the 'value' field, even if it is a single word. Output only the translated JSON data and nothing else. Make sure the output is a valid JSON array that can be parsed with json.loads(). Do not include any text before or after the JSON.)";

}  // namespace

const PromptTemplate& prompt_template(TemplateName name) {
  static const PromptTemplate kTemplates[] = {
      {TemplateName::PdfStyle, "pdf-style-v1", kPdfStyle},
      {TemplateName::Instruction, "instruction-v1", kInstruction},
      {TemplateName::Translate, "translate-v1", kTranslate},
  };
  return kTemplates[static_cast<int>(name)];
}

}  // namespace pdfmine::textgen
