#include "pdfmine/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

#include "pdfmine/error.hpp"
#include "pdfmine/util/fs.hpp"
#include "pdfmine/util/hash.hpp"
#include "pdfmine/util/utf8.hpp"

namespace fs = std::filesystem;

namespace pdfmine::dataset {

namespace {

constexpr std::string_view kImageToken = "<image>\n";

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::istringstream in(util::read_file(path));
  for (std::string line; std::getline(in, line);) {
    if (!util::trim(line).empty()) lines.push_back(line);
  }
  return lines;
}

std::vector<nlohmann::json> read_log(const fs::path& run_dir, std::string_view name) {
  const fs::path path = run_dir / "logs" / name;
  if (!fs::exists(path)) throw Error(ErrorCode::MissingStageLog, "missing stage log " + path.string());
  std::vector<nlohmann::json> out;
  for (const auto& line : read_lines(path)) {
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception&) {
      // A torn trailing line from an interrupted run is not counted.
    }
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  const std::size_t len = util::utf8_decode(s).size();
  if (len < width) s.append(width - len, ' ');
  return s;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (quoted) throw Error(ErrorCode::InvalidInputJson, "unterminated quote in CSV line");
  fields.push_back(cur);
  return fields;
}

double parse_score(const std::string& text, std::string_view column) {
  const std::string t = util::trim(text);
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size()) {
    throw Error(ErrorCode::InvalidInputJson, "bad " + std::string(column) + " value '" + t + "'");
  }
  return v;
}

CategoryScore summarize(const std::vector<const JudgeRow*>& rows) {
  CategoryScore s;
  double model = 0, reference = 0;
  for (const auto* r : rows) {
    model += r->model_score;
    reference += r->reference_score;
  }
  s.rows = rows.size();
  s.model_mean = model / static_cast<double>(rows.size());
  s.reference_mean = reference / static_cast<double>(rows.size());
  s.ratio_pct = 100.0 * s.model_mean / s.reference_mean;
  return s;
}

}  // namespace

std::string sample_id(std::string_view doc_id, int region_id, int k) {
  return std::string(doc_id) + "_" + std::to_string(region_id) + "_" + std::to_string(k);
}

ExportRecord to_export_record(const InstructionSample& sample) {
  try {
    textgen::validate(sample.conversation);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvariantViolation, "sample " + sample.id + ": " + e.what());
  }
  ExportRecord r;
  r.id = sample.id;
  r.image = sample.image_asset;
  for (std::size_t i = 0; i < sample.conversation.turns.size(); ++i) {
    const auto& t = sample.conversation.turns[i];
    ExportTurn turn{t.speaker == textgen::Speaker::Human ? "human" : "gpt", t.text};
    if (i == 0 && turn.value.rfind(kImageToken, 0) != 0) turn.value = std::string(kImageToken) + turn.value;
    r.conversations.push_back(std::move(turn));
  }
  return r;
}

nlohmann::ordered_json to_json(const ExportRecord& record) {
  nlohmann::ordered_json j;
  j["id"] = record.id;
  j["image"] = record.image;
  j["conversations"] = nlohmann::ordered_json::array();
  for (const auto& t : record.conversations) {
    nlohmann::ordered_json turn;
    turn["from"] = t.from;
    turn["value"] = t.value;
    j["conversations"].push_back(std::move(turn));
  }
  return j;
}

std::string render_dataset(const std::vector<InstructionSample>& samples) {
  std::vector<ExportRecord> records;
  records.reserve(samples.size());
  for (const auto& s : samples) records.push_back(to_export_record(s));
  std::sort(records.begin(), records.end(), [](const ExportRecord& a, const ExportRecord& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].id == records[i - 1].id) throw Error(ErrorCode::InvariantViolation, "duplicate id " + records[i].id);
  }
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  return arr.dump(2, ' ', false) + "\n";
}

ExportManifest export_dataset(const std::vector<InstructionSample>& samples, const fs::path& out,
                              const fs::path& images_root) {
  for (const auto& s : samples) {
    const fs::path asset = fs::path(s.image_asset);
    if (s.image_asset.empty() || asset.is_absolute() || !fs::is_regular_file(images_root / asset)) {
      throw Error(ErrorCode::InvariantViolation, "sample " + s.id + " references missing image " + s.image_asset);
    }
  }
  const std::string body = render_dataset(samples);
  if (out.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(out.parent_path(), ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + out.parent_path().string() + ": " + ec.message());
  }
  util::write_file_atomic(out, body);
  return {out, samples.size(), util::sha256_hex(body)};
}

std::vector<ExportRecord> read_dataset(const fs::path& path) {
  std::vector<ExportRecord> out;
  try {
    const auto j = nlohmann::json::parse(util::read_file(path));
    for (const auto& r : j) {
      ExportRecord rec;
      rec.id = r.at("id").get<std::string>();
      rec.image = r.at("image").get<std::string>();
      for (const auto& t : r.at("conversations")) {
        rec.conversations.push_back({t.at("from").get<std::string>(), t.at("value").get<std::string>()});
      }
      out.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidInputJson, path.string() + ": " + e.what());
  }
  return out;
}

CorpusStats compute_stats(const fs::path& run_dir) {
  const auto selection = read_log(run_dir, "selection.jsonl");
  const auto extraction = read_log(run_dir, "extraction.jsonl");
  const auto pairs = read_log(run_dir, "pairs.jsonl");
  const auto quarantine = read_log(run_dir, "quarantine.jsonl");
  const auto generation = read_log(run_dir, "generation.jsonl");

  CorpusStats s;
  s.pdfs_scanned = static_cast<std::int64_t>(selection.size());
  for (const auto& r : selection) s.pdfs_selected += r.value("accepted", false) ? 1 : 0;
  s.pages_processed = static_cast<std::int64_t>(extraction.size());
  for (const auto& r : extraction) {
    s.image_regions += r.value("image_regions", 0);
    s.images_extracted += r.value("images_extracted", 0);
    s.images_size_filtered += r.value("images_size_filtered", 0);
    s.text_blocks_kept += r.value("text_blocks_kept", 0);
    s.text_blocks_dropped += r.value("text_blocks_dropped", 0);
  }
  s.pairs_emitted = static_cast<std::int64_t>(pairs.size());
  s.samples_quarantined = static_cast<std::int64_t>(quarantine.size());
  std::set<std::string> contributing;
  for (const auto& r : generation) {
    if (r.value("status", "") == "ok") {
      ++s.instructions_emitted;
      contributing.insert(r.value("doc_id", ""));
    } else {
      ++s.generation_failures;
    }
  }
  s.pdfs_with_output = static_cast<std::int64_t>(contributing.size());
  s.instructions_per_pdf =
      s.pdfs_selected > 0 ? static_cast<double>(s.instructions_emitted) / static_cast<double>(s.pdfs_selected) : 0.0;
  return s;
}

nlohmann::ordered_json to_json(const CorpusStats& s) {
  nlohmann::ordered_json j;
  j["pdfs_scanned"] = s.pdfs_scanned;
  j["pdfs_selected"] = s.pdfs_selected;
  j["pdfs_with_output"] = s.pdfs_with_output;
  j["pages_processed"] = s.pages_processed;
  j["image_regions"] = s.image_regions;
  j["images_extracted"] = s.images_extracted;
  j["images_size_filtered"] = s.images_size_filtered;
  j["text_blocks_kept"] = s.text_blocks_kept;
  j["text_blocks_dropped"] = s.text_blocks_dropped;
  j["pairs_emitted"] = s.pairs_emitted;
  j["samples_quarantined"] = s.samples_quarantined;
  j["instructions_emitted"] = s.instructions_emitted;
  j["generation_failures"] = s.generation_failures;
  j["instructions_per_pdf"] = s.instructions_per_pdf;
  j["reference_instructions_per_pdf"] = kReferenceInstructionsPerPdf;
  return j;
}

std::string format_stats(const CorpusStats& s) {
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"pdfs scanned", std::to_string(s.pdfs_scanned)},
      {"pdfs selected", std::to_string(s.pdfs_selected)},
      {"pdfs with output (after safety)", std::to_string(s.pdfs_with_output)},
      {"pages processed", std::to_string(s.pages_processed)},
      {"image regions", std::to_string(s.image_regions)},
      {"images extracted", std::to_string(s.images_extracted)},
      {"images size-filtered (<50 px)", std::to_string(s.images_size_filtered)},
      {"text blocks kept", std::to_string(s.text_blocks_kept)},
      {"text blocks dropped", std::to_string(s.text_blocks_dropped)},
      {"pairs emitted", std::to_string(s.pairs_emitted)},
      {"samples quarantined", std::to_string(s.samples_quarantined)},
      {"instructions emitted", std::to_string(s.instructions_emitted)},
      {"generation failures", std::to_string(s.generation_failures)},
      {"instructions per pdf", fixed(s.instructions_per_pdf, 2)},
      {"reference instructions per pdf", fixed(kReferenceInstructionsPerPdf, 2) + " (362K / 200K)"},
  };
  std::string out;
  for (const auto& [k, v] : rows) out += pad(k, 34) + v + "\n";
  return out;
}

ScoreTable aggregate_judge_scores(std::vector<JudgeRow> rows) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no judge rows");
  for (const auto& r : rows) {
    if (!(r.reference_score > 0) || !std::isfinite(r.reference_score)) {
      throw Error(ErrorCode::NonPositiveReference, "question " + r.question_id + " has reference score " +
                                                       fixed(r.reference_score, 3));
    }
    if (!(r.model_score >= 0) || !std::isfinite(r.model_score)) {
      throw Error(ErrorCode::InvalidInputJson, "question " + r.question_id + " has an invalid model score");
    }
  }
  // Canonical order makes the floating-point sums independent of input order.
  std::sort(rows.begin(), rows.end(), [](const JudgeRow& a, const JudgeRow& b) {
    return std::tie(a.category, a.question_id, a.model_score, a.reference_score) <
           std::tie(b.category, b.question_id, b.model_score, b.reference_score);
  });
  ScoreTable table;
  std::map<std::string, std::vector<const JudgeRow*>> groups;
  std::vector<const JudgeRow*> all;
  for (const auto& r : rows) {
    groups[r.category].push_back(&r);
    all.push_back(&r);
  }
  for (const auto& [category, members] : groups) table.per_category[category] = summarize(members);
  table.overall = summarize(all);
  return table;
}

std::vector<JudgeRow> parse_judge_rows(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
      if (!util::trim(line).empty()) lines.push_back(line);
    }
  }
  std::vector<JudgeRow> rows;
  if (lines.empty()) return rows;
  if (util::trim(lines[0]).front() == '{') {
    for (const auto& line : lines) {
      try {
        const auto j = nlohmann::json::parse(line);
        auto field = [&](const char* key) {
          const auto& v = j.at(key);
          return v.is_string() ? v.get<std::string>() : v.dump();
        };
        rows.push_back({field("question_id"), field("category"), j.at("model_score").get<double>(),
                        j.at("reference_score").get<double>()});
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidInputJson, std::string("judge row: ") + e.what());
      }
    }
    return rows;
  }
  const auto header = split_csv_line(lines[0]);
  auto column = [&](std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (util::trim(header[i]) == name) return i;
    }
    throw Error(ErrorCode::InvalidInputJson, "CSV header lacks " + std::string(name));
  };
  const std::size_t q = column("question_id"), c = column("category"), m = column("model_score"),
                    r = column("reference_score");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    if (f.size() != header.size()) {
      throw Error(ErrorCode::InvalidInputJson, "CSV line " + std::to_string(i + 1) + " has " +
                                                   std::to_string(f.size()) + " fields");
    }
    rows.push_back({util::trim(f[q]), util::trim(f[c]), parse_score(f[m], "model_score"),
                    parse_score(f[r], "reference_score")});
  }
  return rows;
}

std::vector<JudgeRow> read_judge_rows(const fs::path& path) { return parse_judge_rows(util::read_file(path)); }

nlohmann::ordered_json to_json(const ScoreTable& table) {
  auto entry = [](const CategoryScore& s) {
    nlohmann::ordered_json j;
    j["rows"] = s.rows;
    j["model_mean"] = s.model_mean;
    j["reference_mean"] = s.reference_mean;
    j["ratio_pct"] = s.ratio_pct;
    return j;
  };
  nlohmann::ordered_json j;
  j["overall_method"] = "pooled over all rows";
  j["per_category"] = nlohmann::ordered_json::object();
  for (const auto& [category, s] : table.per_category) j["per_category"][category] = entry(s);
  j["overall"] = entry(table.overall);
  j["overall_ratio_pct"] = table.overall.ratio_pct;
  return j;
}

std::string format_table(const ScoreTable& table) {
  std::string out = "overall ratio is pooled over all rows\n";
  out += pad("category", 16) + pad("rows", 8) + pad("model", 10) + pad("reference", 12) + "ratio %\n";
  auto line = [&](const std::string& name, const CategoryScore& s) {
    out += pad(name, 16) + pad(std::to_string(s.rows), 8) + pad(fixed(s.model_mean, 3), 10) +
           pad(fixed(s.reference_mean, 3), 12) + fixed(s.ratio_pct, 1) + "\n";
  };
  for (const auto& [category, s] : table.per_category) line(category, s);
  line("overall", table.overall);
  return out;
}

}  // namespace pdfmine::dataset
