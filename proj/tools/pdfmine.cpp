// Command-line front end: one subcommand per stage plus run/resume/stats/score.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pdfmine/corpus.hpp"
#include "pdfmine/dataset.hpp"
#include "pdfmine/error.hpp"
#include "pdfmine/pipeline.hpp"
#include "pdfmine/util/fs.hpp"

namespace fs = std::filesystem;
using namespace pdfmine;

namespace {

enum Exit { kOk = 0, kConfigError = 1, kPartial = 2, kFatal = 3 };

struct Globals {
  std::string config;
  std::string out;
  std::string input;
  int workers = 0;
  std::vector<std::string> providers;
  int halt_after = 0;
  bool json = false;
};

pipeline::RunConfig build_config(const Globals& g, bool from_run_dir) {
  pipeline::RunConfig c;
  if (!g.config.empty()) {
    c = pipeline::load_config(g.config);
  } else if (from_run_dir && !g.out.empty() && fs::exists(pipeline::Layout{g.out}.config())) {
    c = pipeline::load_config(pipeline::Layout{g.out}.config());
  }
  if (!g.input.empty()) c.input = fs::absolute(g.input).lexically_normal();
  if (!g.out.empty()) c.output = fs::absolute(g.out).lexically_normal();
  if (g.workers != 0) c.workers = g.workers;
  for (const auto& p : g.providers) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigInvalid, "--provider expects name=builtin|host:port");
    const std::string name = p.substr(0, eq);
    const std::string value = p.substr(eq + 1);
    if (name == "layout") {
      c.providers.layout = value;
    } else if (name == "recognizer" || name == "ocr") {
      c.providers.recognizer = value;
    } else if (name == "embedder" || name == "embed") {
      c.providers.embedder = value;
    } else if (name == "generator" || name == "llm") {
      c.providers.generator = value;
    } else if (name == "all") {
      c.providers = {value, value, value, value};
    } else {
      throw Error(ErrorCode::ConfigInvalid, "unknown provider '" + name + "'");
    }
  }
  return c;
}

pipeline::RunOptions options_for(const Globals& g, pipeline::Stage stop_at) {
  pipeline::RunOptions opt;
  opt.stop_at = stop_at;
  if (g.halt_after > 0) {
    // simulated crash for resume testing: die without unwinding once N stages are on disk
    auto remaining = std::make_shared<int>(g.halt_after);
    opt.after_stage = [remaining](const std::string&, pipeline::Stage) {
      if (--*remaining == 0) std::_Exit(137);
    };
  }
  return opt;
}

int report(const pipeline::RunManifest& m, const pipeline::RunConfig& c, bool json) {
  if (json) {
    std::cout << pipeline::to_json(m).dump(2) << "\n";
  } else {
    std::cout << "run " << m.run_id << "  config " << m.config_hash.substr(0, 12) << "\n";
    std::cout << "documents: " << m.selected << " selected of " << m.scanned << " scanned\n";
    const auto counts = pipeline::to_json(m)["stage_counts"];
    for (const auto& [stage, n] : counts.items()) std::cout << "  " << stage << ": " << n << "\n";
    if (m.dataset) std::cout << "dataset: " << m.dataset->records << " records in " << m.dataset->path.string() << "\n";
    std::cout << "manifest: " << pipeline::Layout{c.output}.manifest().string() << "\n";
    for (const auto& f : m.failed_docs) {
      std::cerr << "failed " << f.doc_id << " at " << pipeline::to_string(f.stage) << ": " << f.error << "\n";
    }
  }
  return m.partial() ? kPartial : kOk;
}

int cmd_scan(const Globals& g) {
  const auto c = build_config(g, false);
  if (c.input.empty()) throw Error(ErrorCode::ConfigInvalid, "scan needs --input or a config with input");
  for (const auto& src : corpus::enumerate_sources(c.input)) {
    std::string bytes;
    try {
      bytes = util::read_file(src.path);
    } catch (const Error&) {
    }
    const auto probe = corpus::probe_pdf(bytes);
    nlohmann::ordered_json j{{"doc_id", probe.doc_id},
                             {"source_uri", src.uri},
                             {"page_count", probe.page_count},
                             {"first_page_image_count", probe.first_page_image_count},
                             {"parse_ok", probe.parse_ok}};
    std::cout << j.dump() << "\n";
  }
  return kOk;
}

int cmd_stage(const Globals& g, pipeline::Stage stop_at) {
  const auto c = build_config(g, false);
  return report(pipeline::run_pipeline(c, options_for(g, stop_at)), c, g.json);
}

int cmd_resume(const Globals& g) {
  if (g.out.empty() && g.config.empty()) throw Error(ErrorCode::ConfigInvalid, "resume needs --out or --config");
  const auto c = build_config(g, true);
  const auto cp = pipeline::load_checkpoint(pipeline::Layout{c.output}.checkpoint());
  return report(pipeline::resume(cp, c, options_for(g, pipeline::Stage::Exported)), c, g.json);
}

int cmd_stats(const Globals& g) {
  std::string dir = g.out;
  if (dir.empty() && !g.config.empty()) dir = pipeline::load_config(g.config).output.string();
  if (dir.empty()) throw Error(ErrorCode::ConfigInvalid, "stats needs --out");
  const auto s = dataset::compute_stats(dir);
  std::cout << (g.json ? dataset::to_json(s).dump(2) + "\n" : dataset::format_stats(s));
  return kOk;
}

int cmd_score(const std::string& rows, bool json) {
  const auto table = dataset::aggregate_judge_scores(dataset::read_judge_rows(rows));
  std::cout << (json ? dataset::to_json(table).dump(2) + "\n" : dataset::format_table(table));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pdfmine: PDF pages to image-text pairs and visual instruction data"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output directory");
  app.add_option("--input", g.input, "corpus directory or manifest file");
  app.add_option("--workers", g.workers, "document workers")->check(CLI::PositiveNumber);
  app.add_option("--provider", g.providers, "name=builtin|host:port (layout, recognizer, embedder, generator, all)");
  app.add_flag("--json", g.json, "print JSON instead of a summary");
  app.add_option("--halt-after", g.halt_after)->group("");

  auto* scan = app.add_subcommand("scan", "probe every source and print page/image counts");
  struct StageCmd {
    const char* name;
    const char* help;
    pipeline::Stage stage;
  };
  const StageCmd stage_cmds[] = {
      {"select", "apply the selection policy", pipeline::Stage::Selected},
      {"extract", "render pages, analyze layout, crop images, clean text", pipeline::Stage::Extracted},
      {"pair", "pair images with text blocks", pipeline::Stage::Paired},
      {"screen", "NSFW/PII screening", pipeline::Stage::Screened},
      {"generate", "generate instruction data", pipeline::Stage::Generated},
      {"export", "write images and the dataset file", pipeline::Stage::Exported},
      {"run", "full pipeline", pipeline::Stage::Exported},
  };
  std::vector<std::pair<CLI::App*, pipeline::Stage>> stages;
  for (const auto& s : stage_cmds) stages.emplace_back(app.add_subcommand(s.name, s.help), s.stage);
  auto* resume = app.add_subcommand("resume", "continue an interrupted run from its checkpoint");
  auto* stats = app.add_subcommand("stats", "corpus statistics from a run's stage logs");
  auto* score = app.add_subcommand("score", "aggregate judge scores into ratio (%) tables");
  std::string rows;
  score->add_option("rows", rows, "CSV or NDJSON rows")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (scan->parsed()) return cmd_scan(g);
    for (const auto& [sub, stage] : stages) {
      if (sub->parsed()) return cmd_stage(g, stage);
    }
    if (resume->parsed()) return cmd_resume(g);
    if (stats->parsed()) return cmd_stats(g);
    if (score->parsed()) return cmd_score(rows, g.json);
  } catch (const Error& e) {
    std::cerr << "pdfmine: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::ConfigInvalid:
      case ErrorCode::ConfigMismatch:
        return kConfigError;
      default:
        return kFatal;
    }
  } catch (const std::exception& e) {
    std::cerr << "pdfmine: " << e.what() << "\n";
    return kFatal;
  }
  return kFatal;
}
