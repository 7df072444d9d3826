#include "doctest.h"

#include <random>
#include <string>

#include "pdfmine/error.hpp"
#include "pdfmine/safety.hpp"

using namespace pdfmine;
using namespace pdfmine::safety;

namespace {

class ScriptedGenerator final : public ContentGenerator {
 public:
  explicit ScriptedGenerator(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string id() const override { return "scripted"; }
  std::string generate(const GenerationRequest& req) override {
    prompts.push_back(req.prompt);
    tasks.push_back(req.task);
    const std::string r = replies_[std::min(calls, replies_.size() - 1)];
    ++calls;
    if (r == "<unavailable>") throw Error(ErrorCode::ProviderUnavailable, "timeout");
    return r;
  }
  std::size_t calls = 0;
  std::vector<std::string> prompts;
  std::vector<GenerationTask> tasks;

 private:
  std::vector<std::string> replies_;
};

bool has_reason(const SafetyVerdict& v, const std::string& r) {
  return std::find(v.reasons.begin(), v.reasons.end(), r) != v.reasons.end();
}

}  // namespace

TEST_CASE("rule_screen: examples") {
  const RulePack rules = RulePack::defaults();
  auto v = rule_screen("連絡先: foo@example.jp", rules);
  CHECK(v.pii);
  CHECK_FALSE(v.nsfw);
  CHECK(has_reason(v, "email"));
  CHECK(v.source == VerdictSource::RuleBased);

  v = rule_screen("これは桜の写真です", rules);
  CHECK_FALSE(v.flagged());
  CHECK(v.reasons.empty());

  v = rule_screen("電話 03-1234-5678", rules);
  CHECK(v.pii);
  CHECK(has_reason(v, "phone_jp"));
}

TEST_CASE("rule_screen: Japanese phone formats") {
  const RulePack rules = RulePack::defaults();
  const char* positives[] = {
      "03-1234-5678",     "06-6123-4567",     "045-123-4567",   "0466-12-3456",      "0120-123-456",
      "090-1234-5678",    "080 1234 5678",    "070-1234-5678",  "050-1234-5678",     "(03)1234-5678",
      "03(1234)5678",     "0312345678",       "09012345678",    "+81-3-1234-5678",   "+81 90 1234 5678",
      "+81(0)3-1234-5678", "０３－１２３４－５６７８", "TEL:03ー1234ー5678", "お問い合わせ 0570-064-123",
  };
  for (const char* p : positives) {
    CAPTURE(p);
    CHECK(has_reason(rule_screen(p, rules), "phone_jp"));
  }
  const char* negatives[] = {
      "2023-04-01",   "ISBN 978-4-12-345678-9", "1234-5678", "03-1234-567", "090-1234-56789",
      "100-0001",     "価格は12,345円",          "0.5mm",     "00-1234-5678", "090123456789",
  };
  for (const char* n : negatives) {
    CAPTURE(n);
    CHECK_FALSE(has_reason(rule_screen(n, rules), "phone_jp"));
  }
}

TEST_CASE("rule_screen: postal codes with addresses") {
  const RulePack rules = RulePack::defaults();
  CHECK(has_reason(rule_screen("〒100-0001 千代田区千代田1-1", rules), "postal_address"));
  CHECK(has_reason(rule_screen("〒１００－０００１", rules), "postal_address"));
  CHECK(has_reason(rule_screen("住所: 150-0002 東京都渋谷区渋谷2丁目", rules), "postal_address"));
  CHECK_FALSE(has_reason(rule_screen("部品番号 150-0002 の在庫", rules), "postal_address"));
  CHECK_FALSE(has_reason(rule_screen("045-123-4567 神奈川県", rules), "postal_address"));
}

TEST_CASE("rule_screen: keywords and configuration") {
  auto v = rule_screen("無修正ポルノ動画", RulePack::defaults());
  CHECK(v.nsfw);
  CHECK_FALSE(v.pii);
  CHECK(has_reason(v, "nsfw_keyword"));
  CHECK(rule_screen("NUDE art", RulePack::defaults()).nsfw);

  const auto custom = RulePack::from_json(nlohmann::json::parse(
      R"({"version":"t1","email":false,"nsfw_keywords":["禁止語"],
          "extra_patterns":[{"reason":"my_number","pattern":"[0-9]{4} [0-9]{4} [0-9]{4}"}]})"));
  CHECK(custom.version == "t1");
  CHECK_FALSE(rule_screen("foo@example.jp", custom).flagged());
  CHECK(rule_screen("これは禁止語です", custom).nsfw);
  CHECK_FALSE(rule_screen("ポルノ", custom).nsfw);
  const auto mn = rule_screen("番号 1234 5678 9012", custom);
  CHECK(mn.pii);
  CHECK(has_reason(mn, "my_number"));

  CHECK_THROWS_AS(RulePack::from_json(nlohmann::json::parse(R"({"extra_patterns":[{"reason":"x","pattern":"("}]})")),
                  Error);
  CHECK_THROWS_AS(RulePack::from_json(nlohmann::json::parse(R"({"email":"yes"})")), Error);
}

TEST_CASE("rule_screen: deterministic and order independent") {
  const RulePack rules = RulePack::defaults();
  const std::vector<std::string> texts = {"桜の写真", "mail: a.b@c.co.jp", "090-1234-5678", "ヌード", "〒100-0001",
                                          "普通の文章です"};
  std::vector<std::string> baseline;
  for (const auto& t : texts) baseline.push_back(to_json(rule_screen(t, rules)).dump());
  std::mt19937 rng(3);
  for (int i = 0; i < 50; ++i) {
    std::vector<std::size_t> idx(texts.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k : idx) REQUIRE(to_json(rule_screen(texts[k], rules)).dump() == baseline[k]);
  }
}

TEST_CASE("model_screen: verdict parsing") {
  ScriptedGenerator gen({R"({"nsfw":false,"pii":true,"reasons":["address"]})"});
  const auto v = model_screen(nullptr, "text", gen);
  CHECK(v.pii);
  CHECK_FALSE(v.nsfw);
  CHECK(v.reasons == std::vector<std::string>{"address"});
  CHECK(v.source == VerdictSource::ModelBased);
  CHECK(gen.tasks[0] == GenerationTask::SafetyClassification);
  CHECK(gen.prompts[0].find("text") != std::string::npos);

  const char* malformed[] = {
      "This image looks fine to me.",
      R"({"nsfw":false})",
      R"({"nsfw":"no","pii":false,"reasons":[]})",
      R"({"nsfw":true,"pii":false,"reasons":[]})",
      R"([false,false])",
      R"({"nsfw":false,"pii":false,"reasons":[1]})",
  };
  for (const char* m : malformed) {
    CAPTURE(m);
    try {
      parse_verdict(m);
      FAIL("expected MalformedVerdict");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedVerdict);
    }
  }
  CHECK_FALSE(parse_verdict("```json\n{\"nsfw\":false,\"pii\":false,\"reasons\":[]}\n```").flagged());
}

TEST_CASE("screen: rules short-circuit the model") {
  ScriptedGenerator gen({R"({"nsfw":false,"pii":false,"reasons":[]})"});
  const auto flagged = screen(nullptr, "foo@example.jp", RulePack::defaults(), &gen);
  CHECK(flagged.verdict.flagged());
  CHECK_FALSE(flagged.model_called);
  CHECK(gen.calls == 0);

  const auto clean = screen(nullptr, "桜", RulePack::defaults(), &gen);
  CHECK(clean.model_called);
  CHECK_FALSE(clean.verdict.flagged());
  CHECK(gen.calls == 1);
}

TEST_CASE("screen: malformed replies retried then quarantined") {
  ScriptedGenerator twice_bad({"prose", "more prose", R"({"nsfw":false,"pii":false,"reasons":[]})"});
  const auto ok = screen(nullptr, "桜", RulePack::defaults(), &twice_bad);
  CHECK(ok.attempts == 3);
  CHECK_FALSE(ok.conservative);
  CHECK_FALSE(ok.verdict.flagged());

  ScriptedGenerator always_bad({"prose"});
  const auto bad = screen(nullptr, "桜", RulePack::defaults(), &always_bad);
  CHECK(always_bad.calls == 3);
  CHECK(bad.conservative);
  CHECK(bad.verdict.flagged());
  CHECK_FALSE(bad.verdict.reasons.empty());

  ScriptedGenerator down({"<unavailable>"});
  try {
    screen(nullptr, "桜", RulePack::defaults(), &down);
    FAIL("expected ProviderUnavailable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProviderUnavailable);
  }
}

TEST_CASE("apply_filter: partition") {
  const SafetyVerdict clean{};
  const SafetyVerdict pii{false, true, {"email"}, VerdictSource::RuleBased};
  const auto r = apply_filter<std::string>({"a", "b", "c"}, {clean, pii, clean});
  CHECK(r.kept == std::vector<std::string>{"a", "c"});
  REQUIRE(r.quarantined.size() == 1);
  CHECK(r.quarantined[0].first == "b");
  CHECK(r.quarantined[0].second.reasons == std::vector<std::string>{"email"});

  try {
    apply_filter<std::string>({"a", "b"}, {clean, std::nullopt});
    FAIL("expected MissingVerdict");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingVerdict);
  }
  CHECK_THROWS_AS(apply_filter<std::string>({"a"}, {}), Error);

  std::mt19937 rng(5);
  for (int iter = 0; iter < 500; ++iter) {
    const int n = std::uniform_int_distribution<int>(0, 40)(rng);
    std::vector<int> samples;
    std::vector<std::optional<SafetyVerdict>> verdicts;
    for (int i = 0; i < n; ++i) {
      samples.push_back(i);
      SafetyVerdict v;
      v.nsfw = rng() % 4 == 0;
      v.pii = rng() % 4 == 0;
      if (v.flagged()) v.reasons = {"r"};
      verdicts.push_back(v);
    }
    const auto out = apply_filter(samples, verdicts);
    REQUIRE(out.kept.size() + out.quarantined.size() == samples.size());
    std::vector<int> seen = out.kept;
    for (const auto& [s, v] : out.quarantined) {
      REQUIRE(v.flagged());
      seen.push_back(s);
    }
    std::sort(seen.begin(), seen.end());
    REQUIRE(seen == samples);
    REQUIRE(std::is_sorted(out.kept.begin(), out.kept.end()));
  }
}

TEST_CASE("quarantine record shape") {
  const SafetyVerdict v{false, true, {"phone_jp"}, VerdictSource::RuleBased};
  CHECK(quarantine_record("d", "d_p0_r1.jpg", v, "2026-01-01T00:00:00Z").dump() ==
        R"({"doc_id":"d","asset":"d_p0_r1.jpg","reasons":["phone_jp"],"source":"RuleBased","timestamp":"2026-01-01T00:00:00Z"})");
  const auto back = verdict_from_json(nlohmann::json::parse(to_json(v).dump()));
  CHECK(back.pii);
  CHECK(back.reasons == v.reasons);
}
