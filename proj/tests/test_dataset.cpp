#include "doctest.h"

#include <filesystem>
#include <functional>
#include <random>

#include "pdfmine/dataset.hpp"
#include "pdfmine/error.hpp"
#include "pdfmine/util/fs.hpp"

using namespace pdfmine;
using namespace pdfmine::dataset;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pdfmine_ds_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

InstructionSample sample(const std::string& id, const std::string& image, int pairs = 1) {
  InstructionSample s;
  s.id = id;
  s.image_asset = image;
  for (int i = 0; i < pairs; ++i) {
    s.conversation.turns.push_back({textgen::Speaker::Human, "これは何ですか" + std::to_string(i)});
    s.conversation.turns.push_back({textgen::Speaker::Assistant, "桜です。"});
  }
  s.generator_id = "test";
  return s;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvariantViolation;
}

JudgeRow row(std::string q, std::string c, double m, double r) { return {std::move(q), std::move(c), m, r}; }

}  // namespace

TEST_CASE("export: single record shape") {
  TempDir tmp;
  util::write_file_atomic(tmp.path / "images" / "d_p0_r1.jpg", "x");
  const auto m = export_dataset({sample(sample_id("d", 1, 0), "d_p0_r1.jpg")}, tmp.path / "dataset.json",
                                tmp.path / "images");
  CHECK(m.records == 1);
  const std::string text = util::read_file(tmp.path / "dataset.json");
  CHECK(text ==
        "[\n"
        "  {\n"
        "    \"id\": \"d_1_0\",\n"
        "    \"image\": \"d_p0_r1.jpg\",\n"
        "    \"conversations\": [\n"
        "      {\n"
        "        \"from\": \"human\",\n"
        "        \"value\": \"<image>\\nこれは何ですか0\"\n"
        "      },\n"
        "      {\n"
        "        \"from\": \"gpt\",\n"
        "        \"value\": \"桜です。\"\n"
        "      }\n"
        "    ]\n"
        "  }\n"
        "]\n");
  const auto back = read_dataset(tmp.path / "dataset.json");
  REQUIRE(back.size() == 1);
  CHECK(back[0] == to_export_record(sample("d_1_0", "d_p0_r1.jpg")));
}

TEST_CASE("export: empty, sorted, deterministic") {
  TempDir tmp;
  export_dataset({}, tmp.path / "empty.json", tmp.path);
  CHECK(util::read_file(tmp.path / "empty.json") == "[]\n");

  for (const char* name : {"a.jpg", "b.jpg", "c.jpg"}) util::write_file_atomic(tmp.path / "images" / name, "x");
  const std::vector<InstructionSample> samples = {sample("z_3_0", "c.jpg", 2), sample("a_1_0", "a.jpg"),
                                                  sample("m_2_1", "b.jpg", 3)};
  export_dataset(samples, tmp.path / "one.json", tmp.path / "images");
  std::vector<InstructionSample> shuffled = {samples[2], samples[0], samples[1]};
  export_dataset(shuffled, tmp.path / "two.json", tmp.path / "images");
  CHECK(util::read_file(tmp.path / "one.json") == util::read_file(tmp.path / "two.json"));
  const auto back = read_dataset(tmp.path / "one.json");
  REQUIRE(back.size() == 3);
  CHECK(back[0].id == "a_1_0");
  CHECK(back[1].id == "m_2_1");
  CHECK(back[2].id == "z_3_0");
  for (const auto& r : back) {
    CHECK(fs::exists(tmp.path / "images" / r.image));
    CHECK(r.conversations[0].value.rfind("<image>\n", 0) == 0);
    for (std::size_t i = 0; i < r.conversations.size(); ++i) {
      CHECK(r.conversations[i].from == (i % 2 ? "gpt" : "human"));
    }
    CHECK(r.conversations.size() % 2 == 0);
  }
}

TEST_CASE("export: invariant violations") {
  TempDir tmp;
  util::write_file_atomic(tmp.path / "a.jpg", "x");
  CHECK(code_of([&] { export_dataset({sample("a", "missing.jpg")}, tmp.path / "o.json", tmp.path); }) ==
        ErrorCode::InvariantViolation);
  auto bad = sample("a", "a.jpg");
  bad.conversation.turns.pop_back();
  CHECK(code_of([&] { export_dataset({bad}, tmp.path / "o.json", tmp.path); }) == ErrorCode::InvariantViolation);
  CHECK(code_of([&] { export_dataset({sample("a", "a.jpg"), sample("a", "a.jpg")}, tmp.path / "o.json", tmp.path); }) ==
        ErrorCode::InvariantViolation);
  CHECK_FALSE(fs::exists(tmp.path / "o.json"));
  CHECK(code_of([&] { export_dataset({}, tmp.path / "a.jpg" / "o.json", tmp.path); }) == ErrorCode::IoFailure);
}

TEST_CASE("stats from stage logs") {
  TempDir tmp;
  const fs::path logs = tmp.path / "logs";
  CHECK(code_of([&] { compute_stats(tmp.path); }) == ErrorCode::MissingStageLog);
  fs::create_directories(logs);
  for (int i = 0; i < 6; ++i) {
    util::append_line(logs / "selection.jsonl",
                      nlohmann::json{{"doc_id", "d" + std::to_string(i)}, {"accepted", i < 4}}.dump());
  }
  for (int i = 0; i < 4; ++i) {
    util::append_line(logs / "extraction.jsonl", nlohmann::json{{"doc_id", "d" + std::to_string(i)},
                                                                {"image_regions", 3},
                                                                {"images_extracted", 2},
                                                                {"images_size_filtered", 1}}
                                                     .dump());
  }
  util::write_file_atomic(logs / "pairs.jsonl", "");
  util::write_file_atomic(logs / "quarantine.jsonl", "{\"doc_id\":\"d3\"}\n");
  CHECK(code_of([&] { compute_stats(tmp.path); }) == ErrorCode::MissingStageLog);
  for (int i = 0; i < 10; ++i) {
    util::append_line(logs / "generation.jsonl",
                      nlohmann::json{{"doc_id", "d" + std::to_string(i % 3)}, {"status", "ok"}}.dump());
  }
  util::append_line(logs / "generation.jsonl", nlohmann::json{{"doc_id", "d3"}, {"status", "failed"}}.dump());
  const CorpusStats s = compute_stats(tmp.path);
  CHECK(s.pdfs_scanned == 6);
  CHECK(s.pdfs_selected == 4);
  CHECK(s.pdfs_with_output == 3);
  CHECK(s.instructions_emitted == 10);
  CHECK(s.generation_failures == 1);
  CHECK(s.instructions_per_pdf == doctest::Approx(2.5));
  CHECK(s.images_extracted + s.images_size_filtered == s.image_regions);
  CHECK(s.samples_quarantined == 1);
  const std::string table = format_stats(s);
  CHECK(table.find("1.81") != std::string::npos);
  CHECK(table.find("2.50") != std::string::npos);
  CHECK(to_json(s)["reference_instructions_per_pdf"] == 1.81);
}

TEST_CASE("judge aggregation: reference ratios") {
  const auto t = aggregate_judge_scores({row("q1", "conv", 4.0, 5.0), row("q2", "conv", 4.0, 5.0),
                                         row("q3", "detail", 5.5, 5.0), row("q4", "detail", 5.5, 5.0)});
  CHECK(std::abs(t.per_category.at("conv").ratio_pct - 80.0) <= 1e-9);
  CHECK(std::abs(t.per_category.at("detail").ratio_pct - 110.0) <= 1e-9);
  CHECK(t.per_category.at("conv").model_mean == doctest::Approx(4.0));
  CHECK(std::abs(t.overall.ratio_pct - 95.0) <= 1e-9);

  const auto same = aggregate_judge_scores({row("q", "c", 3.0, 3.0), row("r", "c", 7.0, 7.0)});
  CHECK(std::abs(same.overall.ratio_pct - 100.0) <= 1e-9);

  CHECK(code_of([] { aggregate_judge_scores({}); }) == ErrorCode::EmptyInput);
  CHECK(code_of([] { aggregate_judge_scores({row("q", "c", 1, 0)}); }) == ErrorCode::NonPositiveReference);
  CHECK(code_of([] { aggregate_judge_scores({row("q", "c", 1, -2)}); }) == ErrorCode::NonPositiveReference);
}

TEST_CASE("judge aggregation: permutation and scaling invariance") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> score(0.5, 10);
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<JudgeRow> rows;
    const int n = std::uniform_int_distribution<int>(1, 60)(rng);
    for (int i = 0; i < n; ++i) {
      rows.push_back(row("q" + std::to_string(i), "c" + std::to_string(rng() % 4), score(rng), score(rng)));
    }
    const auto base = aggregate_judge_scores(rows);
    std::shuffle(rows.begin(), rows.end(), rng);
    const auto permuted = aggregate_judge_scores(rows);
    REQUIRE(permuted.overall.ratio_pct == base.overall.ratio_pct);
    const double k = std::uniform_real_distribution<double>(0.01, 100)(rng);
    for (auto& r : rows) {
      r.model_score *= k;
      r.reference_score *= k;
    }
    const auto scaled = aggregate_judge_scores(rows);
    REQUIRE(std::abs(scaled.overall.ratio_pct - base.overall.ratio_pct) <= 1e-9);
    for (const auto& [c, s] : base.per_category) {
      REQUIRE(permuted.per_category.at(c).ratio_pct == s.ratio_pct);
      REQUIRE(std::abs(scaled.per_category.at(c).ratio_pct - s.ratio_pct) <= 1e-9);
    }
  }
}

TEST_CASE("judge rows from CSV and NDJSON") {
  const auto csv = parse_judge_rows(
      "category,question_id,model_score,reference_score\r\n\"conv, long\",1,4,5\r\ndetail,\"q\"\"2\",5.5,5\r\n");
  REQUIRE(csv.size() == 2);
  CHECK(csv[0].category == "conv, long");
  CHECK(csv[0].question_id == "1");
  CHECK(csv[1].question_id == "q\"2");
  CHECK(csv[1].model_score == doctest::Approx(5.5));

  const auto nd = parse_judge_rows(
      "{\"question_id\":7,\"category\":\"conv\",\"model_score\":4,\"reference_score\":5}\n\n"
      "{\"question_id\":\"8\",\"category\":\"conv\",\"model_score\":4,\"reference_score\":5}\n");
  REQUIRE(nd.size() == 2);
  CHECK(nd[0].question_id == "7");
  CHECK(std::abs(aggregate_judge_scores(nd).overall.ratio_pct - 80.0) <= 1e-9);

  CHECK(code_of([] { parse_judge_rows("question_id,category,model_score\n1,c,3\n"); }) == ErrorCode::InvalidInputJson);
  CHECK(code_of([] { parse_judge_rows("question_id,category,model_score,reference_score\n1,c,x,3\n"); }) ==
        ErrorCode::InvalidInputJson);
  CHECK(code_of([] { parse_judge_rows("{\"question_id\":1}\n"); }) == ErrorCode::InvalidInputJson);

  const auto table = aggregate_judge_scores(csv);
  const std::string text = format_table(table);
  CHECK(text.find("pooled") != std::string::npos);
  CHECK(text.find("110.0") != std::string::npos);
  CHECK(to_json(table)["per_category"]["detail"]["ratio_pct"].get<double>() == doctest::Approx(110.0));
}
