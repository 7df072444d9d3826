#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pdfmine/error.hpp"
#include "pdfmine/image.hpp"
#include "pdfmine/providers.hpp"

namespace pdfmine::safety {

enum class VerdictSource { RuleBased, ModelBased };
std::string_view to_string(VerdictSource source);

struct SafetyVerdict {
  bool nsfw = false;
  bool pii = false;
  std::vector<std::string> reasons;
  VerdictSource source = VerdictSource::RuleBased;

  bool flagged() const { return nsfw || pii; }
};

struct ExtraPattern {
  std::string reason;
  std::string pattern;  // ECMAScript regex, matched against normalize_for_rules(text)
  bool pii = true;      // false: counts as NSFW
};

struct RulePack {
  std::string version = "rules-v1";
  bool email = true;
  bool phone = true;
  bool postal_address = true;
  std::vector<std::string> nsfw_keywords;
  std::vector<ExtraPattern> extra_patterns;

  static RulePack defaults();
  /// Keys missing from `j` keep their default values. Throws ConfigInvalid.
  static RulePack from_json(const nlohmann::json& j);
};

/// Folds full-width ASCII (digits, letters, @, hyphen variants) to ASCII.
std::string normalize_for_rules(std::string_view text);

/// Reason tags: "email", "phone_jp", "postal_address", "nsfw_keyword" and extra pattern reasons.
SafetyVerdict rule_screen(std::string_view text, const RulePack& rules);

inline constexpr std::string_view kClassificationPromptVersion = "safety-v1";
std::string classification_prompt(std::string_view text);

/// Strict reply parse: a JSON object (optionally inside one ``` fence) with boolean
/// nsfw/pii and a string array reasons. Throws MalformedVerdict.
SafetyVerdict parse_verdict(std::string_view reply);

SafetyVerdict model_screen(const RgbImage* image, std::string_view text, ContentGenerator& generator);

struct ScreenOutcome {
  SafetyVerdict verdict;
  bool model_called = false;
  int attempts = 0;
  /// Set when every model reply was malformed and the sample is quarantined as unsafe.
  bool conservative = false;
};

/// Rules first; only clean material reaches the model. MalformedVerdict is retried
/// `malformed_retries` times, after which the verdict is conservatively unsafe.
/// Without a generator the rule verdict is final.
ScreenOutcome screen(const RgbImage* image, std::string_view text, const RulePack& rules,
                     ContentGenerator* generator, int malformed_retries = 2);

template <class T>
struct FilterResult {
  std::vector<T> kept;
  std::vector<std::pair<T, SafetyVerdict>> quarantined;
};

/// Partitions samples by verdict, preserving order. Throws MissingVerdict when any verdict is absent.
template <class T>
FilterResult<T> apply_filter(const std::vector<T>& samples, const std::vector<std::optional<SafetyVerdict>>& verdicts) {
  if (verdicts.size() != samples.size()) {
    throw Error(ErrorCode::MissingVerdict, std::to_string(samples.size()) + " samples but " +
                                               std::to_string(verdicts.size()) + " verdicts");
  }
  FilterResult<T> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!verdicts[i]) throw Error(ErrorCode::MissingVerdict, "no verdict for sample " + std::to_string(i));
    if (verdicts[i]->flagged()) {
      out.quarantined.emplace_back(samples[i], *verdicts[i]);
    } else {
      out.kept.push_back(samples[i]);
    }
  }
  return out;
}

nlohmann::ordered_json to_json(const SafetyVerdict& verdict);
SafetyVerdict verdict_from_json(const nlohmann::json& j);

/// Quarantine log line {doc_id, asset, reasons, source, timestamp}.
nlohmann::ordered_json quarantine_record(std::string_view doc_id, std::string_view asset, const SafetyVerdict& verdict,
                                         std::string_view timestamp);

}  // namespace pdfmine::safety
