#include "pdfmine/safety.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "pdfmine/util/utf8.hpp"

namespace pdfmine::safety {

namespace {

constexpr const char* kPrefectures[] = {
    "北海道", "青森県", "岩手県", "宮城県", "秋田県", "山形県", "福島県", "茨城県", "栃木県", "群馬県",
    "埼玉県", "千葉県", "東京都", "神奈川県", "新潟県", "富山県", "石川県", "福井県", "山梨県", "長野県",
    "岐阜県", "静岡県", "愛知県", "三重県", "滋賀県", "京都府", "大阪府", "兵庫県", "奈良県", "和歌山県",
    "鳥取県", "島根県", "岡山県", "広島県", "山口県", "徳島県", "香川県", "愛媛県", "高知県", "福岡県",
    "佐賀県", "長崎県", "熊本県", "大分県", "宮崎県", "鹿児島県", "沖縄県"};

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool valid_jp_number(const std::string& digits) {
  if (digits.size() < 10 || digits.size() > 11 || digits[0] != '0' || digits[1] == '0') return false;
  if (digits.size() == 11) {
    const std::string p = digits.substr(0, 3);
    return p == "020" || p == "050" || p == "070" || p == "080" || p == "090";
  }
  return true;
}

bool has_phone(const std::string& s) {
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && (is_digit(s[i - 1]) || s[i - 1] == '-')) continue;
    std::size_t j = i;
    std::string digits;
    bool intl = false;
    if (s[j] == '+') {
      if (s.compare(j + 1, 2, "81") != 0) continue;
      intl = true;
      digits = "0";
      j += 3;
    } else if (s[j] != '0' && s[j] != '(') {
      continue;
    }
    std::size_t end = j;
    while (j < n && digits.size() <= 11) {
      const char c = s[j];
      if (is_digit(c)) {
        digits += c;
        end = ++j;
      } else if (c == '-' || c == '(' || c == ')' || (c == ' ' && j + 1 < n && s[j + 1] != ' ')) {
        ++j;
      } else {
        break;
      }
    }
    if (end < n && is_digit(s[end])) continue;
    if (intl && digits.size() >= 2 && digits[1] == '0') digits.erase(1, 1);  // +81 (0)3 ...
    if (valid_jp_number(digits)) return true;
  }
  return false;
}

bool has_postal_address(const std::string& s) {
  static const std::regex marked("〒\\s*[0-9]{3}-?[0-9]{4}");
  if (std::regex_search(s, marked)) return true;
  static const std::regex bare("[0-9]{3}-[0-9]{4}");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), bare); it != std::sregex_iterator(); ++it) {
    const auto pos = static_cast<std::size_t>(it->position());
    const auto end = pos + static_cast<std::size_t>(it->length());
    if (pos > 0 && (is_digit(s[pos - 1]) || s[pos - 1] == '-')) continue;
    if (end < s.size() && (is_digit(s[end]) || s[end] == '-')) continue;
    const std::size_t lo = pos > 60 ? pos - 60 : 0;
    const std::string window = s.substr(lo, end + 60 - lo);
    for (const char* pref : kPrefectures) {
      if (window.find(pref) != std::string::npos) return true;
    }
  }
  return false;
}

std::string ascii_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

void add_reason(SafetyVerdict& v, const std::string& reason) {
  if (std::find(v.reasons.begin(), v.reasons.end(), reason) == v.reasons.end()) v.reasons.push_back(reason);
}

}  // namespace

std::string_view to_string(VerdictSource source) {
  return source == VerdictSource::RuleBased ? "RuleBased" : "ModelBased";
}

RulePack RulePack::defaults() {
  RulePack r;
  r.nsfw_keywords = {"porn", "hentai", "nude", "nsfw", "xxx", "ポルノ", "ヌード", "アダルト動画", "エロ動画",
                     "成人向け", "セックス", "裸体", "わいせつ", "猥褻"};
  return r;
}

RulePack RulePack::from_json(const nlohmann::json& j) {
  RulePack r = defaults();
  try {
    if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, "rule pack must be a JSON object");
    if (j.contains("version")) r.version = j.at("version").get<std::string>();
    if (j.contains("email")) r.email = j.at("email").get<bool>();
    if (j.contains("phone")) r.phone = j.at("phone").get<bool>();
    if (j.contains("postal_address")) r.postal_address = j.at("postal_address").get<bool>();
    if (j.contains("nsfw_keywords")) r.nsfw_keywords = j.at("nsfw_keywords").get<std::vector<std::string>>();
    if (j.contains("extra_patterns")) {
      for (const auto& p : j.at("extra_patterns")) {
        ExtraPattern e{p.at("reason").get<std::string>(), p.at("pattern").get<std::string>(), p.value("pii", true)};
        try {
          std::regex check(e.pattern);
        } catch (const std::regex_error& err) {
          throw Error(ErrorCode::ConfigInvalid, "bad pattern for " + e.reason + ": " + err.what());
        }
        r.extra_patterns.push_back(std::move(e));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("rule pack: ") + e.what());
  }
  return r;
}

std::string normalize_for_rules(std::string_view text) {
  const auto cps = util::utf8_decode(text);
  std::u32string out;
  out.reserve(cps.size());
  auto digit_at = [&](std::size_t i) {
    if (i >= cps.size()) return false;
    const char32_t c = cps[i];
    return (c >= U'0' && c <= U'9') || (c >= 0xFF10 && c <= 0xFF19);
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    char32_t cp = cps[i];
    if (cp >= 0xFF01 && cp <= 0xFF5E) {
      cp -= 0xFEE0;
    } else if (cp == 0x3000) {
      cp = U' ';
    } else if ((cp >= 0x2010 && cp <= 0x2015) || cp == 0x2212 || cp == 0xFF70) {
      cp = U'-';
    } else if (cp == 0x30FC && i > 0 && digit_at(i - 1) && digit_at(i + 1)) {
      cp = U'-';  // prolonged sound mark typed as a dash between digits
    }
    out.push_back(cp);
  }
  return util::utf8_encode(out);
}

SafetyVerdict rule_screen(std::string_view text, const RulePack& rules) {
  SafetyVerdict v;
  v.source = VerdictSource::RuleBased;
  const std::string s = normalize_for_rules(text);
  static const std::regex email("[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(\\.[A-Za-z0-9-]+)*\\.[A-Za-z]{2,}");
  if (rules.email && std::regex_search(s, email)) {
    v.pii = true;
    add_reason(v, "email");
  }
  if (rules.phone && has_phone(s)) {
    v.pii = true;
    add_reason(v, "phone_jp");
  }
  if (rules.postal_address && has_postal_address(s)) {
    v.pii = true;
    add_reason(v, "postal_address");
  }
  const std::string lower = ascii_lower(s);
  for (const auto& kw : rules.nsfw_keywords) {
    if (!kw.empty() && lower.find(ascii_lower(normalize_for_rules(kw))) != std::string::npos) {
      v.nsfw = true;
      add_reason(v, "nsfw_keyword");
      break;
    }
  }
  for (const auto& p : rules.extra_patterns) {
    if (std::regex_search(s, std::regex(p.pattern))) {
      (p.pii ? v.pii : v.nsfw) = true;
      add_reason(v, p.reason);
    }
  }
  return v;
}

std::string classification_prompt(std::string_view text) {
  std::string prompt =
      "You are a content safety reviewer for an image-text dataset built from Japanese documents.\n"
      "Examine the image and the text below.\n"
      "Set \"nsfw\" to true if the material contains sexual or explicit content or graphic violence.\n"
      "Set \"pii\" to true if it reveals personal information about a private individual, such as a "
      "name together with contact details, an email address, a phone number, a home address or an "
      "identification number.\n"
      "Reply with only a JSON object of the form {\"nsfw\": false, \"pii\": false, \"reasons\": []}. "
      "Give at least one short reason whenever nsfw or pii is true.\n\n"
      "Text:\n";
  prompt += text;
  return prompt;
}

SafetyVerdict parse_verdict(std::string_view reply) {
  std::string body = util::trim(reply);
  if (body.rfind("```", 0) == 0) {
    const auto first_nl = body.find('\n');
    const auto closing = body.rfind("```");
    if (first_nl == std::string::npos || closing <= first_nl) {
      throw Error(ErrorCode::MalformedVerdict, "unterminated code fence");
    }
    body = util::trim(std::string_view(body).substr(first_nl + 1, closing - first_nl - 1));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::MalformedVerdict, "reply is not JSON");
  }
  if (!j.is_object()) throw Error(ErrorCode::MalformedVerdict, "reply is not a JSON object");
  for (const char* key : {"nsfw", "pii"}) {
    if (!j.contains(key) || !j[key].is_boolean()) {
      throw Error(ErrorCode::MalformedVerdict, std::string("missing boolean field ") + key);
    }
  }
  if (!j.contains("reasons") || !j["reasons"].is_array()) {
    throw Error(ErrorCode::MalformedVerdict, "missing reasons array");
  }
  SafetyVerdict v;
  v.source = VerdictSource::ModelBased;
  v.nsfw = j["nsfw"].get<bool>();
  v.pii = j["pii"].get<bool>();
  for (const auto& r : j["reasons"]) {
    if (!r.is_string()) throw Error(ErrorCode::MalformedVerdict, "reasons must be strings");
    v.reasons.push_back(r.get<std::string>());
  }
  if (v.flagged() && v.reasons.empty()) throw Error(ErrorCode::MalformedVerdict, "flagged verdict without reasons");
  return v;
}

SafetyVerdict model_screen(const RgbImage* image, std::string_view text, ContentGenerator& generator) {
  GenerationRequest req;
  req.task = GenerationTask::SafetyClassification;
  req.prompt = classification_prompt(text);
  req.image = image;
  return parse_verdict(generator.generate(req));
}

ScreenOutcome screen(const RgbImage* image, std::string_view text, const RulePack& rules,
                     ContentGenerator* generator, int malformed_retries) {
  ScreenOutcome out;
  out.verdict = rule_screen(text, rules);
  if (out.verdict.flagged() || generator == nullptr) return out;
  out.model_called = true;
  for (int attempt = 0; attempt <= malformed_retries; ++attempt) {
    ++out.attempts;
    try {
      out.verdict = model_screen(image, text, *generator);
      return out;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MalformedVerdict) throw;
    }
  }
  out.conservative = true;
  out.verdict = SafetyVerdict{true, true, {"malformed_verdict"}, VerdictSource::ModelBased};
  return out;
}

nlohmann::ordered_json to_json(const SafetyVerdict& verdict) {
  nlohmann::ordered_json j;
  j["nsfw"] = verdict.nsfw;
  j["pii"] = verdict.pii;
  j["reasons"] = verdict.reasons;
  j["source"] = to_string(verdict.source);
  return j;
}

SafetyVerdict verdict_from_json(const nlohmann::json& j) {
  try {
    SafetyVerdict v;
    v.nsfw = j.at("nsfw").get<bool>();
    v.pii = j.at("pii").get<bool>();
    v.reasons = j.at("reasons").get<std::vector<std::string>>();
    v.source = j.at("source").get<std::string>() == "ModelBased" ? VerdictSource::ModelBased : VerdictSource::RuleBased;
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptCheckpoint, std::string("verdict record: ") + e.what());
  }
}

nlohmann::ordered_json quarantine_record(std::string_view doc_id, std::string_view asset, const SafetyVerdict& verdict,
                                         std::string_view timestamp) {
  nlohmann::ordered_json j;
  j["doc_id"] = doc_id;
  j["asset"] = asset;
  j["reasons"] = verdict.reasons;
  j["source"] = to_string(verdict.source);
  j["timestamp"] = timestamp;
  return j;
}

}  // namespace pdfmine::safety
