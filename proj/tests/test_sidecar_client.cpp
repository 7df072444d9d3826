#include "doctest.h"

#include <atomic>
#include <functional>
#include <thread>

#include "pdfmine/error.hpp"
#include "pdfmine/page_extract.hpp"
#include "pdfmine/pairing.hpp"
#include "pdfmine/sidecar_client.hpp"
#include "support/fake_sidecar.hpp"

using namespace pdfmine;
using namespace pdfmine::sidecar;
using pdfmine::testing::FakeReply;
using pdfmine::testing::FakeSidecar;

namespace {

RetryPolicy fast_retry() {
  RetryPolicy r;
  r.initial_backoff = std::chrono::milliseconds(1);
  r.request_timeout = std::chrono::milliseconds(2000);
  r.connect_timeout = std::chrono::milliseconds(500);
  return r;
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

FakeReply echo(const nlohmann::json& req) {
  if (req.value("method", "") == "health") return FakeSidecar::result({{"ok", true}, {"models", {"fake"}}});
  return FakeSidecar::result({{"method", req.value("method", "")}, {"params", req.value("params", nlohmann::json())}});
}

}  // namespace

TEST_CASE("endpoint parsing") {
  const auto ep = Endpoint::parse("localhost:7000");
  CHECK(ep.host == "localhost");
  CHECK(ep.port == 7000);
  CHECK(Endpoint::parse("[::1]:80").host == "::1");
  for (const char* bad : {"localhost", ":80", "host:", "host:0", "host:70000", "host:8a", "a b:80"}) {
    CAPTURE(bad);
    CHECK(code_of([&] { Endpoint::parse(bad); }) == ErrorCode::ConfigInvalid);
  }
}

TEST_CASE("health and request framing") {
  std::vector<nlohmann::json> seen;
  std::mutex mu;
  FakeSidecar server([&](const nlohmann::json& req) {
    std::lock_guard<std::mutex> lock(mu);
    seen.push_back(req);
    return echo(req);
  });
  Client client(Endpoint::parse(server.address()), fast_retry());
  const auto h = client.health();
  CHECK(h["ok"] == true);
  const auto r = client.call("embed.text", {{"text", "桜"}});
  CHECK(r["params"]["text"] == "桜");
  REQUIRE(seen.size() == 2);
  CHECK(seen[0]["method"] == "health");
  CHECK(seen[0]["id"].is_string());
  CHECK(seen[0]["id"] != seen[1]["id"]);
  CHECK(server.connections() == 1);
}

TEST_CASE("pipelined requests correlate out-of-order replies") {
  FakeSidecar server([](const nlohmann::json& req) {
    FakeReply r = echo(req);
    r.delay_ms = 40 - 4 * req["params"]["n"].get<int>();  // later requests answer first
    return r;
  });
  Client client(Endpoint::parse(server.address()), fast_retry(), 16);
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int i = 0; i < 10; ++i) {
    threads.emplace_back([&, i] {
      const auto r = client.call("embed.text", {{"n", i}});
      if (r["params"]["n"] == i) ++ok;
    });
  }
  for (auto& t : threads) t.join();
  CHECK(ok == 10);
  CHECK(server.connections() == 1);
  CHECK(server.max_concurrent() > 1);
}

TEST_CASE("overloaded replies back off and halve the limiter") {
  std::atomic<int> calls{0};
  FakeSidecar server([&](const nlohmann::json& req) {
    return ++calls <= 2 ? FakeSidecar::error("Overloaded", "busy") : echo(req);
  });
  Client client(Endpoint::parse(server.address()), fast_retry(), 8);
  CHECK(client.call("embed.text", {{"text", "x"}})["method"] == "embed.text");
  CHECK(calls == 3);
  CHECK(client.limiter().limit() == 2);

  FakeSidecar always([](const nlohmann::json&) { return FakeSidecar::error("Overloaded"); });
  Client c2(Endpoint::parse(always.address()), fast_retry(), 8);
  CHECK(code_of([&] { c2.call("health", {}); }) == ErrorCode::ProviderOverloaded);
  CHECK(always.requests() == 3);
  CHECK(c2.limiter().limit() == 1);
}

TEST_CASE("limiter bounds in-flight requests") {
  FakeSidecar server([](const nlohmann::json& req) {
    FakeReply r = echo(req);
    r.delay_ms = 20;
    return r;
  });
  Client client(Endpoint::parse(server.address()), fast_retry(), 2);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&] { client.call("health", {}); });
  for (auto& t : threads) t.join();
  CHECK(server.max_concurrent() <= 2);
  CHECK(server.requests() == 8);
}

TEST_CASE("error classification") {
  FakeSidecar bad([](const nlohmann::json&) { return FakeSidecar::error("BadRequest", "unknown method"); });
  Client c1(Endpoint::parse(bad.address()), fast_retry());
  CHECK(code_of([&] { c1.call("nope", {}); }) == ErrorCode::ProviderMalformedReply);
  CHECK(bad.requests() == 1);

  std::atomic<int> n{0};
  FakeSidecar flaky([&](const nlohmann::json& req) {
    return ++n == 1 ? FakeSidecar::error("ModelFailure", "oom") : echo(req);
  });
  Client c2(Endpoint::parse(flaky.address()), fast_retry());
  CHECK(c2.call("health", {})["ok"] == true);

  FakeSidecar both([](const nlohmann::json&) {
    return FakeReply{{{"result", 1}, {"error", {{"code", "ModelFailure"}}}}, {}, false, false, 0};
  });
  Client c3(Endpoint::parse(both.address()), fast_retry());
  CHECK(code_of([&] { c3.call("health", {}); }) == ErrorCode::ProviderMalformedReply);

  FakeSidecar garbage([](const nlohmann::json&) { return FakeReply{{}, "this is not json", false, false, 0}; });
  Client c4(Endpoint::parse(garbage.address()), fast_retry());
  CHECK(code_of([&] { c4.call("health", {}); }) == ErrorCode::ProviderMalformedReply);
}

TEST_CASE("unavailable sidecar: refused, dropped, silent") {
  int dead_port = 0;
  {
    FakeSidecar tmp(echo);
    dead_port = tmp.port();
  }
  Client refused(Endpoint{"127.0.0.1", dead_port}, fast_retry());
  CHECK(code_of([&] { refused.call("health", {}); }) == ErrorCode::ProviderUnavailable);

  std::atomic<int> n{0};
  FakeSidecar dropper([&](const nlohmann::json& req) {
    if (++n == 1) return FakeReply{{}, {}, true, false, 0};
    return echo(req);
  });
  Client reconnecting(Endpoint::parse(dropper.address()), fast_retry());
  CHECK(reconnecting.call("health", {})["ok"] == true);
  CHECK(dropper.connections() == 2);

  FakeSidecar silent([](const nlohmann::json&) { return FakeReply{{}, {}, false, true, 0}; });
  RetryPolicy quick = fast_retry();
  quick.request_timeout = std::chrono::milliseconds(30);
  Client waiting(Endpoint::parse(silent.address()), quick);
  CHECK(code_of([&] { waiting.call("health", {}); }) == ErrorCode::ProviderUnavailable);
  CHECK(silent.requests() == 3);
}

TEST_CASE("provider adapters speak the wire format") {
  RgbImage img(8, 4);
  img.at(1, 1)[0] = 7;
  FakeSidecar server([&](const nlohmann::json& req) {
    const std::string m = req["method"];
    const auto& p = req["params"];
    if (m == "layout.analyze") {
      const RgbImage got = decode_image_param(p["image"]);
      if (!(got == img) || p["width"] != 8) return FakeSidecar::error("BadRequest", "image mismatch");
      return FakeSidecar::result({{"regions",
                                   {{{"kind", "image"}, {"bbox", {0, 0, 4, 4}}, {"confidence", 0.9}},
                                    {{"kind", "table"}, {"bbox", {0, 0, 1, 1}}, {"confidence", 0.9}},
                                    {{"kind", "text"}, {"bbox", {4, 0, 8, 2}}}}}});
    }
    if (m == "ocr.recognize") {
      nlohmann::json results = nlohmann::json::array();
      for (const auto& r : p["regions"]) results.push_back({{"text", "領域" + r["region_id"].dump()}, {"confidence", 0.5}});
      return FakeSidecar::result({{"results", results}});
    }
    if (m == "embed.text") return FakeSidecar::result({{"vector", {1.0, 0.0, 0.0}}, {"dim", 3}});
    if (m == "embed.image") return FakeSidecar::result({{"vector", {1.0, 1.0}}, {"dim", 2}});
    if (m == "llm.generate") {
      return FakeSidecar::result({{"text", p["task"].get<std::string>() + "|" + std::to_string(p.value("max_pairs", 0)) +
                                               "|" + (p.contains("image") ? "img" : "noimg")}});
    }
    return FakeSidecar::error("BadRequest", "unknown method");
  });
  auto client = std::make_shared<Client>(Endpoint::parse(server.address()), fast_retry());

  extract::PageImage page;
  page.width_px = 8;
  page.height_px = 4;
  page.pixels = img;
  SidecarLayout layout(client);
  const auto regions = extract::analyze_layout(page, layout);
  REQUIRE(regions.size() == 2);
  CHECK(regions[0].kind == extract::RegionKind::ImageRegion);
  CHECK(regions[1].kind == extract::RegionKind::TextRegion);
  CHECK(regions[1].confidence == doctest::Approx(1.0));

  SidecarRecognizer ocr(client);
  const std::vector<extract::Region> text = {regions[1]};
  const auto blocks = extract::recognize_text(page, text, ocr);
  REQUIRE(blocks.size() == 1);
  CHECK(blocks[0].content == "領域1");

  SidecarEmbedder embedder(client, 3);
  CHECK(pairing::embed_text("x", embedder).dim() == 3);
  CHECK(code_of([&] { pairing::embed_image(img, embedder); }) == ErrorCode::DimensionMismatch);

  SidecarGenerator gen(client);
  GenerationRequest req;
  req.task = GenerationTask::Instruction;
  req.qa_pairs = 4;
  req.image = &img;
  CHECK(gen.generate(req) == "instruction|4|img");
  req.task = GenerationTask::Translate;
  req.image = nullptr;
  CHECK(gen.generate(req) == "translate|0|noimg");
}
