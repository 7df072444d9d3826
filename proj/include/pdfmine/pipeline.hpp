#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pdfmine/corpus.hpp"
#include "pdfmine/dataset.hpp"
#include "pdfmine/pairing.hpp"
#include "pdfmine/textgen.hpp"

namespace pdfmine::pipeline {

/// Per-document progress, in execution order.
enum class Stage { Selected, Extracted, Paired, Screened, Generated, Exported };

std::string_view to_string(Stage stage);
/// Throws CorruptCheckpoint for unknown names.
Stage parse_stage(std::string_view text);

inline constexpr std::string_view kBuiltin = "builtin";

/// Each entry is "builtin" or a sidecar "host:port".
struct ProviderConfig {
  std::string layout{kBuiltin};
  std::string recognizer{kBuiltin};
  std::string embedder{kBuiltin};
  std::string generator{kBuiltin};
};

struct RetryConfig {
  int attempts = 3;
  int initial_backoff_ms = 1000;
  double multiplier = 2.0;
  int request_timeout_ms = 120000;
  int max_in_flight = 8;
};

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  corpus::SelectionPolicy selection;
  int dpi = 150;
  int jpeg_quality = 90;
  int min_chars = 3;
  double min_script_ratio = 0.5;
  pairing::PairingStrategy strategy = pairing::PairingStrategy::top1();
  textgen::ContextMode context_mode = textgen::ContextMode::ImagePlusPairedText;
  int qa_pairs = 3;
  int embedding_dim = 64;
  /// Ask the generator for a safety verdict on samples the rules pass.
  bool model_screening = true;
  ProviderConfig providers;
  int workers = 1;
  std::optional<std::filesystem::path> rule_pack;
  /// When given, must equal the compiled template hashes.
  std::map<std::string, std::string> prompt_hashes;
  RetryConfig retry;

  /// Throws ConfigInvalid.
  void validate() const;
};

/// Strict parse; unknown keys are rejected. Relative paths resolve against `base_dir`.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const RunConfig& config);

/// Hex SHA-256 over everything that can change outputs: output root, worker count
/// and retry tuning are excluded; rule pack contents and prompt hashes are included.
std::string config_hash(const RunConfig& config);

/// Compiled template hashes keyed pdf_style, instruction, translate.
std::map<std::string, std::string> current_prompt_hashes();

struct Checkpoint {
  std::string run_id;
  std::string config_hash;
  std::map<std::string, Stage> stages;
};

/// Reads <out>/checkpoint.jsonl. A torn final line is ignored; anything else
/// unreadable, or a stage going backwards, raises CorruptCheckpoint.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Append-only journal; record() is safe to call from several workers.
class CheckpointStore {
 public:
  /// Creates the file with its header when absent.
  CheckpointStore(std::filesystem::path path, const std::string& run_id, const std::string& config_hash);
  void record(const std::string& doc_id, Stage stage);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mu_;
};

struct FailedDoc {
  std::string doc_id;
  Stage stage = Stage::Selected;  // the stage that could not complete
  std::string error;
};

struct RunManifest {
  std::string run_id;
  std::string config_hash;
  nlohmann::ordered_json config;
  std::map<std::string, std::string> prompt_hashes;
  std::string rule_pack_version;
  std::map<std::string, std::string> provider_ids;
  std::int64_t scanned = 0;
  std::int64_t selected = 0;
  /// Number of selected documents whose last completed stage is at least the key.
  std::map<std::string, std::int64_t> stage_counts;
  std::vector<FailedDoc> failed_docs;
  std::optional<dataset::ExportManifest> dataset;
  dataset::CorpusStats stats;

  bool partial() const { return !failed_docs.empty(); }
};

nlohmann::ordered_json to_json(const RunManifest& manifest);

struct RunOptions {
  /// Stop every document after this stage; the dataset is only written at Exported.
  Stage stop_at = Stage::Exported;
  /// Called after each executed (not skipped) document stage has been checkpointed.
  /// Throwing from it aborts the run once the workers drain.
  std::function<void(const std::string& doc_id, Stage stage)> after_stage;
};

/// Runs select, extract, pair, screen, generate, export. An existing checkpoint in
/// the output directory is continued when its config hash matches (ConfigMismatch
/// otherwise). Document-level provider failures go to failed_docs; I/O failures
/// raise StageFatal.
RunManifest run_pipeline(const RunConfig& config, const RunOptions& options = {});

/// Continues from `checkpoint`. Throws ConfigMismatch when the hashes differ.
RunManifest resume(const Checkpoint& checkpoint, const RunConfig& config, const RunOptions& options = {});

/// Standard locations under an output root.
struct Layout {
  std::filesystem::path root;
  std::filesystem::path checkpoint() const { return root / "checkpoint.jsonl"; }
  std::filesystem::path config() const { return root / "run_config.json"; }
  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path dataset() const { return root / "dataset.json"; }
  std::filesystem::path images() const { return root / "images"; }
  std::filesystem::path logs() const { return root / "logs"; }
  std::filesystem::path work() const { return root / "work"; }
};

}  // namespace pdfmine::pipeline
