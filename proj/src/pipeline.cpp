#include "pdfmine/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <memory>
#include <set>
#include <thread>

#include "pdfmine/builtin_providers.hpp"
#include "pdfmine/error.hpp"
#include "pdfmine/image.hpp"
#include "pdfmine/page_extract.hpp"
#include "pdfmine/pdf/document.hpp"
#include "pdfmine/safety.hpp"
#include "pdfmine/sidecar_client.hpp"
#include "pdfmine/util/fs.hpp"
#include "pdfmine/util/hash.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace pdfmine::pipeline {

namespace {

constexpr Stage kAllStages[] = {Stage::Selected, Stage::Extracted, Stage::Paired,
                                Stage::Screened, Stage::Generated, Stage::Exported};

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); }

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error("unknown key '" + key + "' in " + where);
    }
  }
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(std::string("bad type for '") + key + "'");
  }
}

fs::path resolve_path(const std::string& text, const fs::path& base) {
  fs::path p(text);
  if (p.is_relative()) p = (base.empty() ? fs::current_path() : base) / p;
  return fs::absolute(p).lexically_normal();
}

bool is_builtin(const std::string& endpoint) { return endpoint == kBuiltin; }

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json read_json(const fs::path& p) {
  try {
    return json::parse(util::read_file(p));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptCheckpoint, "unreadable artifact " + p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const ordered_json& j) { util::write_file_atomic(p, j.dump(2) + "\n"); }

std::string join_contents(const json& texts) {
  std::string out;
  for (const auto& t : texts) {
    if (!out.empty()) out += "\n";
    out += t.at("content").get<std::string>();
  }
  return out;
}

safety::RulePack load_rules(const RunConfig& c) {
  if (!c.rule_pack) return safety::RulePack::defaults();
  json j;
  try {
    j = json::parse(util::read_file(*c.rule_pack));
  } catch (const json::exception& e) {
    config_error("rule pack " + c.rule_pack->string() + ": " + e.what());
  } catch (const Error& e) {
    config_error(e.what());
  }
  return safety::RulePack::from_json(j);
}

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Selected: return "Selected";
    case Stage::Extracted: return "Extracted";
    case Stage::Paired: return "Paired";
    case Stage::Screened: return "Screened";
    case Stage::Generated: return "Generated";
    case Stage::Exported: return "Exported";
  }
  return "?";
}

Stage parse_stage(std::string_view text) {
  for (Stage s : kAllStages) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::CorruptCheckpoint, "unknown stage '" + std::string(text) + "'");
}

// ---- config

void RunConfig::validate() const {
  std::error_code ec;
  if (input.empty() || !fs::exists(input, ec)) config_error("input does not exist: " + input.string());
  if (output.empty()) config_error("output directory not set");
  selection.validate();
  if (dpi <= 0 || dpi > 1200) config_error("dpi must be in 1..1200");
  if (jpeg_quality < 1 || jpeg_quality > 100) config_error("jpeg_quality must be in 1..100");
  if (min_chars < 0) config_error("clean.min_chars must be >= 0");
  if (!(min_script_ratio >= 0.0 && min_script_ratio <= 1.0)) config_error("clean.min_script_ratio must be in [0,1]");
  if (qa_pairs < 1) config_error("qa_pairs must be >= 1");
  if (embedding_dim < 1) config_error("embedding_dim must be >= 1");
  if (workers < 1) config_error("workers must be >= 1");
  for (const auto* ep : {&providers.layout, &providers.recognizer, &providers.embedder, &providers.generator}) {
    if (!is_builtin(*ep)) sidecar::Endpoint::parse(*ep);
  }
  if (rule_pack) {
    if (!fs::exists(*rule_pack, ec)) config_error("rule pack does not exist: " + rule_pack->string());
    load_rules(*this);
  }
  const auto current = current_prompt_hashes();
  for (const auto& [name, hash] : prompt_hashes) {
    const auto it = current.find(name);
    if (it == current.end()) config_error("unknown prompt template '" + name + "'");
    if (it->second != hash) config_error("prompt hash for '" + name + "' does not match the compiled template");
  }
  if (retry.attempts < 1) config_error("retry.attempts must be >= 1");
  if (retry.initial_backoff_ms < 0) config_error("retry.initial_backoff_ms must be >= 0");
  if (!(retry.multiplier >= 1.0)) config_error("retry.multiplier must be >= 1");
  if (retry.request_timeout_ms < 1) config_error("retry.request_timeout_ms must be >= 1");
  if (retry.max_in_flight < 1) config_error("retry.max_in_flight must be >= 1");
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  check_keys(j,
             {"input", "output", "selection", "dpi", "jpeg_quality", "clean", "pairing", "context_mode", "qa_pairs",
              "embedding_dim", "model_screening", "providers", "workers", "rule_pack", "prompt_hashes", "retry"},
             "config");
  RunConfig c;
  std::string s;
  if (j.contains("input")) {
    read_opt(j, "input", s);
    c.input = resolve_path(s, base_dir);
  }
  if (j.contains("output")) {
    read_opt(j, "output", s);
    c.output = resolve_path(s, base_dir);
  }
  if (j.contains("selection")) {
    const auto& sel = j["selection"];
    check_keys(sel, {"max_pages", "min_first_page_images"}, "selection");
    read_opt(sel, "max_pages", c.selection.max_pages);
    read_opt(sel, "min_first_page_images", c.selection.min_first_page_images);
  }
  read_opt(j, "dpi", c.dpi);
  read_opt(j, "jpeg_quality", c.jpeg_quality);
  if (j.contains("clean")) {
    const auto& cl = j["clean"];
    check_keys(cl, {"min_chars", "min_script_ratio"}, "clean");
    read_opt(cl, "min_chars", c.min_chars);
    read_opt(cl, "min_script_ratio", c.min_script_ratio);
  }
  if (j.contains("pairing")) {
    read_opt(j, "pairing", s);
    c.strategy = pairing::parse_strategy(s);
  }
  if (j.contains("context_mode")) {
    read_opt(j, "context_mode", s);
    c.context_mode = textgen::parse_context_mode(s);
  }
  read_opt(j, "qa_pairs", c.qa_pairs);
  read_opt(j, "embedding_dim", c.embedding_dim);
  read_opt(j, "model_screening", c.model_screening);
  if (j.contains("providers")) {
    const auto& p = j["providers"];
    check_keys(p, {"layout", "recognizer", "embedder", "generator"}, "providers");
    read_opt(p, "layout", c.providers.layout);
    read_opt(p, "recognizer", c.providers.recognizer);
    read_opt(p, "embedder", c.providers.embedder);
    read_opt(p, "generator", c.providers.generator);
  }
  read_opt(j, "workers", c.workers);
  if (j.contains("rule_pack") && !j["rule_pack"].is_null()) {
    read_opt(j, "rule_pack", s);
    c.rule_pack = resolve_path(s, base_dir);
  }
  read_opt(j, "prompt_hashes", c.prompt_hashes);
  if (j.contains("retry")) {
    const auto& r = j["retry"];
    check_keys(r, {"attempts", "initial_backoff_ms", "multiplier", "request_timeout_ms", "max_in_flight"}, "retry");
    read_opt(r, "attempts", c.retry.attempts);
    read_opt(r, "initial_backoff_ms", c.retry.initial_backoff_ms);
    read_opt(r, "multiplier", c.retry.multiplier);
    read_opt(r, "request_timeout_ms", c.retry.request_timeout_ms);
    read_opt(r, "max_in_flight", c.retry.max_in_flight);
  }
  return c;
}

RunConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(util::read_file(path));
  } catch (const json::exception& e) {
    config_error("config " + path.string() + ": " + e.what());
  } catch (const Error& e) {
    config_error(e.what());
  }
  return config_from_json(j, fs::absolute(path).parent_path());
}

namespace {

ordered_json providers_json(const ProviderConfig& p) {
  return {{"layout", p.layout}, {"recognizer", p.recognizer}, {"embedder", p.embedder}, {"generator", p.generator}};
}

/// The part of the config that determines outputs.
ordered_json output_affecting(const RunConfig& c) {
  ordered_json j;
  j["input"] = c.input.generic_string();
  j["selection"] = {{"max_pages", c.selection.max_pages}, {"min_first_page_images", c.selection.min_first_page_images}};
  j["dpi"] = c.dpi;
  j["jpeg_quality"] = c.jpeg_quality;
  j["clean"] = {{"min_chars", c.min_chars}, {"min_script_ratio", c.min_script_ratio}};
  j["pairing"] = pairing::to_string(c.strategy);
  j["context_mode"] = std::string(textgen::to_string(c.context_mode));
  j["qa_pairs"] = c.qa_pairs;
  j["embedding_dim"] = c.embedding_dim;
  j["model_screening"] = c.model_screening;
  j["providers"] = providers_json(c.providers);
  return j;
}

}  // namespace

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["input"] = c.input.generic_string();
  j["output"] = c.output.generic_string();
  const ordered_json body = output_affecting(c);
  for (const auto& [k, v] : body.items()) {
    if (k != "input") j[k] = v;
  }
  j["workers"] = c.workers;
  j["rule_pack"] = c.rule_pack ? ordered_json(c.rule_pack->generic_string()) : ordered_json(nullptr);
  ordered_json hashes = ordered_json::object();
  for (const auto& [k, v] : current_prompt_hashes()) hashes[k] = v;
  j["prompt_hashes"] = hashes;
  j["retry"] = {{"attempts", c.retry.attempts},
                {"initial_backoff_ms", c.retry.initial_backoff_ms},
                {"multiplier", c.retry.multiplier},
                {"request_timeout_ms", c.retry.request_timeout_ms},
                {"max_in_flight", c.retry.max_in_flight}};
  return j;
}

std::map<std::string, std::string> current_prompt_hashes() {
  return {{"pdf_style", textgen::prompt_hash(textgen::TemplateName::PdfStyle)},
          {"instruction", textgen::prompt_hash(textgen::TemplateName::Instruction)},
          {"translate", textgen::prompt_hash(textgen::TemplateName::Translate)}};
}

std::string config_hash(const RunConfig& c) {
  ordered_json j = output_affecting(c);
  j["rule_pack"] = c.rule_pack ? util::sha256_hex(util::read_file(*c.rule_pack)) : std::string("defaults");
  ordered_json hashes = ordered_json::object();
  for (const auto& [k, v] : current_prompt_hashes()) hashes[k] = v;
  j["prompt_hashes"] = hashes;
  j["safety_prompt"] = std::string(safety::kClassificationPromptVersion);
  return util::sha256_hex(j.dump());
}

// ---- checkpoint

Checkpoint load_checkpoint(const fs::path& path) {
  std::string text;
  try {
    text = util::read_file(path);
  } catch (const Error&) {
    throw Error(ErrorCode::CorruptCheckpoint, "cannot read " + path.string());
  }
  Checkpoint cp;
  bool have_header = false;
  std::size_t pos = 0;
  int line_no = 0;
  while (true) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) break;  // anything after the last newline is a torn write
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const auto where = path.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw Error(ErrorCode::CorruptCheckpoint, "unparsable line " + where);
    }
    if (!j.is_object()) throw Error(ErrorCode::CorruptCheckpoint, "not an object at " + where);
    if (!have_header) {
      if (!j.contains("run_id") || !j["run_id"].is_string() || !j.contains("config_hash") ||
          !j["config_hash"].is_string()) {
        throw Error(ErrorCode::CorruptCheckpoint, "missing header at " + where);
      }
      cp.run_id = j["run_id"];
      cp.config_hash = j["config_hash"];
      have_header = true;
      continue;
    }
    if (!j.contains("doc_id") || !j["doc_id"].is_string() || !j.contains("stage") || !j["stage"].is_string()) {
      throw Error(ErrorCode::CorruptCheckpoint, "bad entry at " + where);
    }
    const std::string doc = j["doc_id"];
    const Stage stage = parse_stage(j["stage"].get<std::string>());
    const auto it = cp.stages.find(doc);
    if (it != cp.stages.end() && stage < it->second) {
      throw Error(ErrorCode::CorruptCheckpoint, "stage went backwards for " + doc + " at " + where);
    }
    cp.stages[doc] = stage;
  }
  if (!have_header) throw Error(ErrorCode::CorruptCheckpoint, "no header in " + path.string());
  return cp;
}

CheckpointStore::CheckpointStore(fs::path path, const std::string& run_id, const std::string& hash)
    : path_(std::move(path)) {
  std::error_code ec;
  std::string existing;
  if (fs::exists(path_, ec)) existing = util::read_file(path_);
  const auto last_nl = existing.rfind('\n');
  const std::string kept = last_nl == std::string::npos ? std::string() : existing.substr(0, last_nl + 1);
  if (kept.empty()) {
    ordered_json header{{"run_id", run_id}, {"config_hash", hash}};
    util::write_file_atomic(path_, header.dump() + "\n");
  } else if (kept.size() != existing.size()) {
    util::write_file_atomic(path_, kept);  // drop a torn tail before appending
  }
}

void CheckpointStore::record(const std::string& doc_id, Stage stage) {
  ordered_json j{{"doc_id", doc_id}, {"stage", std::string(to_string(stage))}};
  std::lock_guard<std::mutex> lock(mu_);
  util::append_line(path_, j.dump());
}

// ---- manifest

ordered_json to_json(const RunManifest& m) {
  ordered_json j;
  j["run_id"] = m.run_id;
  j["config_hash"] = m.config_hash;
  j["config"] = m.config;
  ordered_json hashes = ordered_json::object();
  for (const auto& [k, v] : m.prompt_hashes) hashes[k] = v;
  j["prompt_hashes"] = hashes;
  j["rule_pack_version"] = m.rule_pack_version;
  ordered_json ids = ordered_json::object();
  for (const auto& [k, v] : m.provider_ids) ids[k] = v;
  j["providers"] = ids;
  j["documents"] = {{"scanned", m.scanned}, {"selected", m.selected}};
  ordered_json stages = ordered_json::object();
  for (Stage s : kAllStages) {
    const auto it = m.stage_counts.find(std::string(to_string(s)));
    stages[std::string(to_string(s))] = it == m.stage_counts.end() ? 0 : it->second;
  }
  j["stage_counts"] = stages;
  ordered_json failed = ordered_json::array();
  for (const auto& f : m.failed_docs) {
    failed.push_back({{"doc_id", f.doc_id}, {"stage", std::string(to_string(f.stage))}, {"error", f.error}});
  }
  j["failed_docs"] = failed;
  if (m.dataset) {
    j["dataset"] = {{"path", m.dataset->path.filename().string()},
                    {"records", m.dataset->records},
                    {"sha256", m.dataset->sha256}};
  } else {
    j["dataset"] = nullptr;
  }
  j["stats"] = dataset::to_json(m.stats);
  return j;
}

// ---- run

namespace {

struct SelectedDoc {
  std::string doc_id;
  std::string source_uri;
  fs::path path;
  int page_index = 0;
};

struct SelectionResult {
  std::vector<ordered_json> records;
  std::vector<SelectedDoc> accepted;  // sorted by doc_id
};

SelectionResult run_selection(const RunConfig& c) {
  SelectionResult out;
  std::set<std::string> seen;
  for (const auto& src : corpus::enumerate_sources(c.input)) {
    std::string bytes;
    try {
      bytes = util::read_file(src.path);
    } catch (const Error&) {
      bytes.clear();  // probes as a parse failure
    }
    auto probe = corpus::probe_pdf(bytes);
    probe.source_uri = src.uri;
    const bool dup = probe.parse_ok && !seen.insert(probe.doc_id).second;
    const auto decision = dup ? corpus::duplicate_of(probe) : corpus::select(probe, c.selection);
    out.records.push_back(corpus::selection_record(probe, decision));
    if (decision.accepted) out.accepted.push_back({probe.doc_id, src.uri, src.path, decision.selected_page_index});
  }
  std::sort(out.accepted.begin(), out.accepted.end(),
            [](const SelectedDoc& a, const SelectedDoc& b) { return a.doc_id < b.doc_id; });
  return out;
}

ordered_json to_json(const SelectionResult& s) {
  ordered_json accepted = ordered_json::array();
  for (const auto& d : s.accepted) {
    accepted.push_back(
        {{"doc_id", d.doc_id}, {"source_uri", d.source_uri}, {"path", d.path.string()}, {"page_index", d.page_index}});
  }
  return {{"records", s.records}, {"accepted", accepted}};
}

SelectionResult selection_from_json(const json& j) {
  try {
    SelectionResult s;
    for (const auto& r : j.at("records")) s.records.push_back(ordered_json::parse(r.dump()));
    for (const auto& a : j.at("accepted")) {
      s.accepted.push_back({a.at("doc_id").get<std::string>(), a.at("source_uri").get<std::string>(),
                            fs::path(a.at("path").get<std::string>()), a.at("page_index").get<int>()});
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptCheckpoint, std::string("bad selection artifact: ") + e.what());
  }
}

/// Shared provider instances. Builtin layout and recognizer read the document
/// itself, so they are built per page instead.
struct Providers {
  std::map<std::string, std::shared_ptr<sidecar::Client>> clients;
  std::shared_ptr<LayoutProvider> layout;
  std::shared_ptr<TextRecognizer> recognizer;
  std::shared_ptr<EmbeddingProvider> embedder;
  std::shared_ptr<ContentGenerator> generator;
  std::map<std::string, std::string> ids;

  std::shared_ptr<sidecar::Client> client(const std::string& endpoint, const RetryConfig& r) {
    auto& slot = clients[endpoint];
    if (!slot) {
      sidecar::RetryPolicy policy;
      policy.attempts = r.attempts;
      policy.initial_backoff = std::chrono::milliseconds(r.initial_backoff_ms);
      policy.multiplier = r.multiplier;
      policy.request_timeout = std::chrono::milliseconds(r.request_timeout_ms);
      slot = std::make_shared<sidecar::Client>(sidecar::Endpoint::parse(endpoint), policy, r.max_in_flight);
    }
    return slot;
  }
};

Providers make_providers(const RunConfig& c) {
  Providers p;
  const auto& pc = c.providers;
  if (!is_builtin(pc.layout)) p.layout = std::make_shared<sidecar::SidecarLayout>(p.client(pc.layout, c.retry));
  if (!is_builtin(pc.recognizer)) {
    p.recognizer = std::make_shared<sidecar::SidecarRecognizer>(p.client(pc.recognizer, c.retry));
  }
  if (is_builtin(pc.embedder)) {
    p.embedder = std::make_shared<BuiltinEmbedder>(c.embedding_dim);
  } else {
    p.embedder = std::make_shared<sidecar::SidecarEmbedder>(p.client(pc.embedder, c.retry), c.embedding_dim);
  }
  if (is_builtin(pc.generator)) {
    p.generator = std::make_shared<BuiltinGenerator>();
  } else {
    p.generator = std::make_shared<sidecar::SidecarGenerator>(p.client(pc.generator, c.retry));
  }
  p.ids["layout"] = p.layout ? p.layout->id() : "builtin-layout/1";
  p.ids["recognizer"] = p.recognizer ? p.recognizer->id() : "builtin-textlayer/1";
  p.ids["embedder"] = p.embedder->id();
  p.ids["generator"] = p.generator->id();
  for (auto& [endpoint, client] : p.clients) {
    try {
      client->health();
    } catch (const Error& e) {
      throw Error(ErrorCode::ProviderUnavailable, "sidecar " + endpoint + " failed its health check: " + e.what());
    }
  }
  return p;
}

class DocFailure : public std::runtime_error {
 public:
  DocFailure(Stage stage, const std::string& msg) : std::runtime_error(msg), stage(stage) {}
  Stage stage;
};

class Runner {
 public:
  Runner(const RunConfig& c, const Layout& lay, Providers& p, const safety::RulePack& rules, CheckpointStore& store,
         const RunOptions& opt)
      : c_(c), lay_(lay), p_(p), rules_(rules), store_(store), opt_(opt) {}

  /// Advances one document up to opt_.stop_at; `done` tracks the last completed stage.
  void advance(const SelectedDoc& d, Stage& done) {
    for (Stage s : kAllStages) {
      if (s <= done || s > opt_.stop_at) continue;
      try {
        execute(d, s);
      } catch (const Error& e) {
        switch (e.code()) {
          case ErrorCode::IoFailure:
          case ErrorCode::InvariantViolation:
          case ErrorCode::CorruptCheckpoint:
            throw Error(ErrorCode::StageFatal,
                        "document " + d.doc_id + " at stage " + std::string(to_string(s)) + ": " + e.what());
          default:
            throw DocFailure(s, e.what());
        }
      }
      store_.record(d.doc_id, s);
      done = s;
      if (opt_.after_stage) opt_.after_stage(d.doc_id, s);
    }
  }

 private:
  fs::path dir(const SelectedDoc& d) const { return lay_.work() / d.doc_id; }

  void execute(const SelectedDoc& d, Stage s) {
    switch (s) {
      case Stage::Selected: return;
      case Stage::Extracted: return extract(d);
      case Stage::Paired: return pair(d);
      case Stage::Screened: return screen(d);
      case Stage::Generated: return generate(d);
      case Stage::Exported: return export_images(d);
    }
  }

  void extract(const SelectedDoc& d) {
    const auto doc = pdf::Document::load(util::read_file(d.path));
    const auto page = extract::rasterize(doc, d.doc_id, d.page_index, c_.dpi);

    std::optional<extract::BuiltinPageAnalysis> analysis;
    if (!p_.layout || !p_.recognizer) analysis = extract::analyze_builtin(doc, d.page_index, c_.dpi);
    std::unique_ptr<LayoutProvider> own_layout;
    std::unique_ptr<TextRecognizer> own_recognizer;
    LayoutProvider* layout = p_.layout.get();
    TextRecognizer* recognizer = p_.recognizer.get();
    if (!layout) layout = (own_layout = std::make_unique<extract::BuiltinLayoutProvider>(*analysis)).get();
    if (!recognizer) {
      recognizer = (own_recognizer = std::make_unique<extract::BuiltinTextRecognizer>(*analysis)).get();
    }

    const auto regions = extract::analyze_layout(page, *layout);
    std::vector<extract::Region> text_regions;
    for (const auto& r : regions) {
      if (r.kind == extract::RegionKind::TextRegion) text_regions.push_back(r);
    }
    const auto blocks = extract::recognize_text(page, text_regions, *recognizer);
    const auto kept = extract::clean_text(blocks, c_.min_chars, c_.min_script_ratio);
    const auto crops = extract::crop_images(page, regions);

    fs::create_directories(dir(d));
    ordered_json j;
    j["doc_id"] = d.doc_id;
    j["page_index"] = d.page_index;
    j["width_px"] = page.width_px;
    j["height_px"] = page.height_px;
    j["dpi"] = page.dpi;
    j["regions"] = ordered_json::array();
    for (const auto& r : regions) j["regions"].push_back(extract::to_json(r));
    j["text_blocks"] = ordered_json::array();
    for (const auto& b : kept) j["text_blocks"].push_back(extract::to_json(b));
    j["images"] = ordered_json::array();
    for (const auto& img : crops.images) {
      const std::string crop = "crop_r" + std::to_string(img.region_id) + ".png";
      util::write_file_atomic(dir(d) / crop, encode_png(img.crop, 3));
      j["images"].push_back({{"region_id", img.region_id},
                             {"asset", extract::crop_asset_name(d.doc_id, d.page_index, img.region_id)},
                             {"crop", crop},
                             {"width_px", img.width_px},
                             {"height_px", img.height_px}});
    }
    const auto image_regions = std::count_if(regions.begin(), regions.end(), [](const extract::Region& r) {
      return r.kind == extract::RegionKind::ImageRegion;
    });
    j["counts"] = {{"image_regions", image_regions},
                   {"images_extracted", crops.images.size()},
                   {"images_size_filtered", crops.size_filtered},
                   {"text_blocks_kept", kept.size()},
                   {"text_blocks_dropped", blocks.size() - kept.size()}};
    write_json(dir(d) / "extract.json", j);
  }

  void pair(const SelectedDoc& d) {
    const json ex = read_json(dir(d) / "extract.json");
    std::vector<pairing::Candidate> candidates;
    for (const auto& b : ex.at("text_blocks")) {
      auto block = extract::text_block_from_json(b);
      auto emb = pairing::embed_text(block.content, *p_.embedder);
      const int order = block.region_id;
      candidates.push_back({std::move(block), order, std::move(emb)});
    }
    ordered_json samples = ordered_json::array();
    int unpaired = 0;
    for (const auto& img : ex.at("images")) {
      if (candidates.empty()) {
        ++unpaired;
        continue;
      }
      const auto crop = read_png_file(dir(d) / img.at("crop").get<std::string>());
      const auto emb = pairing::embed_image(crop, *p_.embedder);
      pairing::PairedSample ps;
      ps.image_region_id = img.at("region_id");
      ps.image_asset = img.at("asset");
      ps.strategy = c_.strategy;
      ps.texts = pairing::pair(emb, candidates, c_.strategy);
      samples.push_back({{"image_region_id", ps.image_region_id},
                         {"crop", img.at("crop")},
                         {"record", pairing::pair_record(d.doc_id, ps)}});
    }
    write_json(dir(d) / "pairs.json", {{"samples", samples}, {"unpaired_images", unpaired}});
  }

  void screen(const SelectedDoc& d) {
    const json pairs = read_json(dir(d) / "pairs.json");
    ContentGenerator* gen = c_.model_screening ? p_.generator.get() : nullptr;
    ordered_json out = ordered_json::array();
    for (const auto& s : pairs.at("samples")) {
      const auto crop = read_png_file(dir(d) / s.at("crop").get<std::string>());
      const auto& record = s.at("record");
      const auto outcome = safety::screen(&crop, join_contents(record.at("texts")), rules_, gen);
      ordered_json e;
      e["image_region_id"] = s.at("image_region_id");
      e["crop"] = s.at("crop");
      e["image_asset"] = record.at("image_asset");
      e["context"] = join_contents(record.at("texts"));
      e["verdict"] = safety::to_json(outcome.verdict);
      e["model_called"] = outcome.model_called;
      e["attempts"] = outcome.attempts;
      e["conservative"] = outcome.conservative;
      if (outcome.verdict.flagged()) e["screened_at"] = utc_now();
      out.push_back(e);
    }
    write_json(dir(d) / "screen.json", {{"samples", out}});
  }

  void generate(const SelectedDoc& d) {
    const json screened = read_json(dir(d) / "screen.json");
    ordered_json samples = ordered_json::array();
    ordered_json log = ordered_json::array();
    for (const auto& s : screened.at("samples")) {
      if (safety::verdict_from_json(s.at("verdict")).flagged()) continue;
      const int region = s.at("image_region_id");
      const std::string id = dataset::sample_id(d.doc_id, region, 0);
      const auto crop = read_png_file(dir(d) / s.at("crop").get<std::string>());

      ordered_json entry{{"doc_id", d.doc_id}, {"sample_id", id}};
      try {
        std::optional<std::string> context;
        std::optional<std::string> pdf_style;
        if (c_.context_mode == textgen::ContextMode::ImagePlusPairedText) {
          context = s.at("context").get<std::string>();
        } else if (c_.context_mode == textgen::ContextMode::ImagePlusPdfStyleText) {
          pdf_style = textgen::gen_pdf_style(crop, *p_.generator).text;
          context = pdf_style;
        }
        textgen::GenerationAudit audit;
        const auto conv = textgen::gen_instructions(crop, context, c_.context_mode, *p_.generator, c_.qa_pairs, &audit);
        ordered_json sample{{"id", id},
                            {"image_asset", s.at("image_asset")},
                            {"crop", s.at("crop")},
                            {"conversation", textgen::to_json(conv)},
                            {"provenance", std::string(textgen::to_string(c_.context_mode))},
                            {"generator_id", p_.generator->id()}};
        if (pdf_style) sample["pdf_style_text"] = *pdf_style;
        samples.push_back(sample);
        entry["status"] = "ok";
        entry["task"] = audit.task;
        entry["prompt_hash"] = audit.prompt_hash;
        entry["provider_id"] = audit.provider_id;
        entry["retries"] = audit.retries;
        entry["turns"] = conv.turns.size();
      } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedConversation && e.code() != ErrorCode::EmptyReply) throw;
        entry["status"] = "failed";
        entry["provider_id"] = p_.generator->id();
        entry["error"] = e.what();
      }
      log.push_back(entry);
    }
    write_json(dir(d) / "generate.json", {{"samples", samples}, {"log", log}});
  }

  void export_images(const SelectedDoc& d) {
    const json gen = read_json(dir(d) / "generate.json");
    for (const auto& s : gen.at("samples")) {
      const auto crop = read_png_file(dir(d) / s.at("crop").get<std::string>());
      util::write_file_atomic(lay_.images() / s.at("image_asset").get<std::string>(),
                              encode_jpeg(crop, c_.jpeg_quality));
    }
  }

  const RunConfig& c_;
  const Layout& lay_;
  Providers& p_;
  const safety::RulePack& rules_;
  CheckpointStore& store_;
  const RunOptions& opt_;
};

std::string lines_of(const std::vector<ordered_json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

/// Rebuilds every stage log from work artifacts, in doc_id order.
void write_logs(const Layout& lay, const SelectionResult& sel, const std::map<std::string, Stage>& stages) {
  fs::create_directories(lay.logs());
  std::vector<ordered_json> extraction, pairs, quarantine, generation;
  for (const auto& d : sel.accepted) {
    const auto it = stages.find(d.doc_id);
    if (it == stages.end()) continue;
    const Stage st = it->second;
    const fs::path dir = lay.work() / d.doc_id;
    if (st >= Stage::Extracted) {
      const json ex = read_json(dir / "extract.json");
      ordered_json row{{"doc_id", d.doc_id}, {"page_index", ex.at("page_index")}};
      for (const auto& [k, v] : ex.at("counts").items()) row[k] = v;
      extraction.push_back(row);
    }
    if (st >= Stage::Paired) {
      const json pj = read_json(dir / "pairs.json");
      for (const auto& s : pj.at("samples")) {
        pairs.push_back(ordered_json::parse(s.at("record").dump()));
      }
    }
    if (st >= Stage::Screened) {
      const json sj = read_json(dir / "screen.json");
      for (const auto& s : sj.at("samples")) {
        const auto verdict = safety::verdict_from_json(s.at("verdict"));
        if (!verdict.flagged()) continue;
        quarantine.push_back(safety::quarantine_record(d.doc_id, s.at("image_asset").get<std::string>(), verdict,
                                                       s.at("screened_at").get<std::string>()));
      }
    }
    if (st >= Stage::Generated) {
      const json gj = read_json(dir / "generate.json");
      for (const auto& e : gj.at("log")) generation.push_back(ordered_json::parse(e.dump()));
    }
  }
  util::write_file_atomic(lay.logs() / "selection.jsonl", lines_of(sel.records));
  util::write_file_atomic(lay.logs() / "extraction.jsonl", lines_of(extraction));
  util::write_file_atomic(lay.logs() / "pairs.jsonl", lines_of(pairs));
  util::write_file_atomic(lay.logs() / "quarantine.jsonl", lines_of(quarantine));
  util::write_file_atomic(lay.logs() / "generation.jsonl", lines_of(generation));
}

std::vector<dataset::InstructionSample> collect_samples(const Layout& lay, const SelectionResult& sel,
                                                        const std::map<std::string, Stage>& stages) {
  std::vector<dataset::InstructionSample> out;
  for (const auto& d : sel.accepted) {
    const auto it = stages.find(d.doc_id);
    if (it == stages.end() || it->second < Stage::Exported) continue;
    const json gj = read_json(lay.work() / d.doc_id / "generate.json");
    for (const auto& s : gj.at("samples")) {
      dataset::InstructionSample sample;
      sample.id = s.at("id");
      sample.image_asset = s.at("image_asset");
      sample.conversation = textgen::conversation_from_json(s.at("conversation"));
      sample.provenance = textgen::parse_context_mode(s.at("provenance").get<std::string>());
      sample.generator_id = s.at("generator_id");
      out.push_back(std::move(sample));
    }
  }
  return out;
}

RunManifest execute_run(const RunConfig& config, const std::string& hash, bool have_checkpoint,
                        std::map<std::string, Stage> stages, const RunOptions& options) {
  const Layout lay{config.output};
  const std::string run_id = "run-" + hash.substr(0, 16);
  const auto rules = load_rules(config);
  auto providers = make_providers(config);

  try {
    fs::create_directories(lay.work());
    fs::create_directories(lay.images());
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::IoFailure, e.what());
  }
  CheckpointStore store(lay.checkpoint(), run_id, hash);
  util::write_file_atomic(lay.config(), to_json(config).dump(2) + "\n");

  const fs::path selection_file = lay.work() / "selection.json";
  SelectionResult sel;
  if (have_checkpoint && fs::exists(selection_file)) {
    sel = selection_from_json(read_json(selection_file));
  } else {
    sel = run_selection(config);
    write_json(selection_file, to_json(sel));
  }
  for (const auto& d : sel.accepted) {
    if (stages.count(d.doc_id)) continue;
    store.record(d.doc_id, Stage::Selected);
    stages[d.doc_id] = Stage::Selected;
    if (options.after_stage) options.after_stage(d.doc_id, Stage::Selected);
  }

  std::vector<const SelectedDoc*> todo;
  for (const auto& d : sel.accepted) {
    if (stages[d.doc_id] < options.stop_at) todo.push_back(&d);
  }

  Runner runner(config, lay, providers, rules, store, options);
  std::mutex mu;
  std::vector<FailedDoc> failed;
  std::exception_ptr fatal;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  auto work = [&] {
    while (!abort) {
      const std::size_t i = next++;
      if (i >= todo.size()) return;
      const SelectedDoc& d = *todo[i];
      Stage done;
      {
        std::lock_guard<std::mutex> lock(mu);
        done = stages[d.doc_id];
      }
      try {
        runner.advance(d, done);
      } catch (const DocFailure& f) {
        std::lock_guard<std::mutex> lock(mu);
        failed.push_back({d.doc_id, f.stage, f.what()});
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!fatal) fatal = std::current_exception();
        abort = true;
      }
      std::lock_guard<std::mutex> lock(mu);
      stages[d.doc_id] = done;
    }
  };
  const int n_threads = std::max(1, std::min<int>(config.workers, static_cast<int>(todo.size())));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  RunManifest m;
  m.run_id = run_id;
  m.config_hash = hash;
  m.config = to_json(config);
  m.prompt_hashes = current_prompt_hashes();
  m.rule_pack_version = rules.version;
  m.provider_ids = providers.ids;
  m.scanned = static_cast<std::int64_t>(sel.records.size());
  m.selected = static_cast<std::int64_t>(sel.accepted.size());
  for (Stage s : kAllStages) {
    std::int64_t n = 0;
    for (const auto& d : sel.accepted) n += stages[d.doc_id] >= s ? 1 : 0;
    m.stage_counts[std::string(to_string(s))] = n;
  }
  std::sort(failed.begin(), failed.end(), [](const FailedDoc& a, const FailedDoc& b) { return a.doc_id < b.doc_id; });
  m.failed_docs = std::move(failed);

  write_logs(lay, sel, stages);
  if (options.stop_at == Stage::Exported) {
    m.dataset = dataset::export_dataset(collect_samples(lay, sel, stages), lay.dataset(), lay.images());
  }
  m.stats = dataset::compute_stats(lay.root);
  util::write_file_atomic(lay.manifest(), to_json(m).dump(2) + "\n");
  return m;
}

}  // namespace

RunManifest run_pipeline(const RunConfig& config, const RunOptions& options) {
  config.validate();
  const std::string hash = config_hash(config);
  const Layout lay{config.output};
  std::error_code ec;
  if (fs::exists(lay.checkpoint(), ec)) return resume(load_checkpoint(lay.checkpoint()), config, options);
  return execute_run(config, hash, false, {}, options);
}

RunManifest resume(const Checkpoint& checkpoint, const RunConfig& config, const RunOptions& options) {
  config.validate();
  const std::string hash = config_hash(config);
  if (hash != checkpoint.config_hash) {
    throw Error(ErrorCode::ConfigMismatch,
                "config hash " + hash.substr(0, 12) + " does not match checkpoint " + checkpoint.config_hash.substr(0, 12));
  }
  return execute_run(config, hash, true, checkpoint.stages, options);
}

}  // namespace pdfmine::pipeline
