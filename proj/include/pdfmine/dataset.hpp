#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pdfmine/textgen.hpp"

namespace pdfmine::dataset {

struct InstructionSample {
  std::string id;
  /// Path relative to the images/ root.
  std::string image_asset;
  textgen::Conversation conversation;
  textgen::ContextMode provenance = textgen::ContextMode::ImageOnly;
  std::string generator_id;
};

/// {doc_id}_{region_id}_{k}
std::string sample_id(std::string_view doc_id, int region_id, int k);

struct ExportTurn {
  std::string from;  // "human" or "gpt"
  std::string value;
  friend bool operator==(const ExportTurn&, const ExportTurn&) = default;
};

struct ExportRecord {
  std::string id;
  std::string image;
  std::vector<ExportTurn> conversations;
  friend bool operator==(const ExportRecord&, const ExportRecord&) = default;
};

/// Throws InvariantViolation for an invalid conversation.
ExportRecord to_export_record(const InstructionSample& sample);
nlohmann::ordered_json to_json(const ExportRecord& record);

struct ExportManifest {
  std::filesystem::path path;
  std::size_t records = 0;
  std::string sha256;
};

/// Serialized dataset: a JSON array sorted by id, 2-space indent, trailing newline.
std::string render_dataset(const std::vector<InstructionSample>& samples);

/// Writes the dataset atomically. Every image must exist under `images_root`
/// and ids must be unique (InvariantViolation); write errors raise IoFailure.
ExportManifest export_dataset(const std::vector<InstructionSample>& samples, const std::filesystem::path& out,
                              const std::filesystem::path& images_root);

/// Reads an exported dataset back. Throws InvalidInputJson.
std::vector<ExportRecord> read_dataset(const std::filesystem::path& path);

inline constexpr double kReferenceInstructionsPerPdf = 1.81;  // 362K instructions from 200K PDFs

struct CorpusStats {
  std::int64_t pdfs_scanned = 0;
  std::int64_t pdfs_selected = 0;
  std::int64_t pdfs_with_output = 0;  // selected PDFs that still contribute after safety screening
  std::int64_t pages_processed = 0;
  std::int64_t image_regions = 0;
  std::int64_t images_extracted = 0;
  std::int64_t images_size_filtered = 0;
  std::int64_t text_blocks_kept = 0;
  std::int64_t text_blocks_dropped = 0;
  std::int64_t pairs_emitted = 0;
  std::int64_t samples_quarantined = 0;
  std::int64_t instructions_emitted = 0;
  std::int64_t generation_failures = 0;
  double instructions_per_pdf = 0.0;
};

/// Stage logs read from <run>/logs: selection.jsonl, extraction.jsonl, pairs.jsonl,
/// quarantine.jsonl, generation.jsonl. Throws MissingStageLog.
CorpusStats compute_stats(const std::filesystem::path& run_dir);

nlohmann::ordered_json to_json(const CorpusStats& stats);
std::string format_stats(const CorpusStats& stats);

struct JudgeRow {
  std::string question_id;
  std::string category;
  double model_score = 0.0;
  double reference_score = 0.0;
};

struct CategoryScore {
  std::size_t rows = 0;
  double model_mean = 0.0;
  double reference_mean = 0.0;
  double ratio_pct = 0.0;
};

struct ScoreTable {
  std::map<std::string, CategoryScore> per_category;
  CategoryScore overall;  // pooled over all rows
};

/// ratio_pct = 100 * model_mean / reference_mean. Throws EmptyInput, NonPositiveReference,
/// and InvalidInputJson for a negative or non-finite model score.
ScoreTable aggregate_judge_scores(std::vector<JudgeRow> rows);

/// CSV with a header row, or newline-delimited JSON; columns question_id, category,
/// model_score, reference_score. Throws InvalidInputJson or IoFailure.
std::vector<JudgeRow> read_judge_rows(const std::filesystem::path& path);
std::vector<JudgeRow> parse_judge_rows(std::string_view text);

nlohmann::ordered_json to_json(const ScoreTable& table);
std::string format_table(const ScoreTable& table);

}  // namespace pdfmine::dataset
