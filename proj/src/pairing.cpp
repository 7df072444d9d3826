#include "pdfmine/pairing.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "pdfmine/error.hpp"
#include "pdfmine/util/utf8.hpp"

namespace pdfmine::pairing {

namespace {

Embedding checked(std::vector<double> v, const EmbeddingProvider& embedder) {
  if (static_cast<int>(v.size()) != embedder.dim()) {
    throw Error(ErrorCode::DimensionMismatch, embedder.id() + " returned " + std::to_string(v.size()) +
                                                  " values, declared " + std::to_string(embedder.dim()));
  }
  double norm = 0;
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(ErrorCode::ProviderMalformedReply, "non-finite embedding value");
    norm += x * x;
  }
  if (norm <= 0) throw Error(ErrorCode::ProviderMalformedReply, "zero embedding from " + embedder.id());
  return Embedding{std::move(v)};
}

}  // namespace

Embedding embed_text(std::string_view text, EmbeddingProvider& embedder) {
  if (util::trim(text).empty()) throw Error(ErrorCode::EmptyInput, "cannot embed empty text");
  return checked(embedder.embed_text(text), embedder);
}

Embedding embed_image(const RgbImage& image, EmbeddingProvider& embedder) {
  if (image.empty()) throw Error(ErrorCode::EmptyInput, "cannot embed an empty image");
  return checked(embedder.embed_image(image), embedder);
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim() || a.dim() == 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "dimensions " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
  }
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.vector.size(); ++i) {
    dot += a.vector[i] * b.vector[i];
    na += a.vector[i] * a.vector[i];
    nb += b.vector[i] * b.vector[i];
  }
  if (na <= 0 || nb <= 0) throw Error(ErrorCode::ZeroVector, "cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

PairingStrategy PairingStrategy::top_k(int k) {
  if (k < 1) throw Error(ErrorCode::ConfigInvalid, "TopK requires k >= 1");
  return {Kind::TopK, k};
}

std::string to_string(const PairingStrategy& strategy) {
  switch (strategy.kind) {
    case PairingStrategy::Kind::Top1: return "Top1";
    case PairingStrategy::Kind::TopK: return "TopK(" + std::to_string(strategy.k) + ")";
    case PairingStrategy::Kind::Neighbor: return "Neighbor";
  }
  return "Top1";
}

PairingStrategy parse_strategy(std::string_view text) {
  std::string s;
  for (char c : text) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "top1") return PairingStrategy::top1();
  if (s == "neighbor" || s == "neighbour") return PairingStrategy::neighbor();
  std::string digits;
  if (s.rfind("topk(", 0) == 0 && s.size() > 6 && s.back() == ')') {
    digits = s.substr(5, s.size() - 6);
  } else if (s.rfind("topk:", 0) == 0) {
    digits = s.substr(5);
  } else if (s.rfind("top", 0) == 0) {
    digits = s.substr(3);
  }
  if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
      digits.size() < 6) {
    return PairingStrategy::top_k(std::stoi(digits));
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown pairing strategy '" + std::string(text) + "'");
}

std::vector<PairedText> pair(const Embedding& image, const std::vector<Candidate>& candidates,
                             const PairingStrategy& strategy) {
  if (candidates.empty()) throw Error(ErrorCode::NoCandidates, "no text candidates to pair with");
  std::vector<PairedText> scored;
  scored.reserve(candidates.size());
  for (const auto& c : candidates) {
    scored.push_back({c.text, c.reading_order_index, cosine_similarity(image, c.embedding)});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const PairedText& a, const PairedText& b) {
    return a.reading_order_index < b.reading_order_index;
  });

  std::size_t best = 0;
  for (std::size_t i = 1; i < scored.size(); ++i) {
    if (scored[i].similarity > scored[best].similarity) best = i;
  }

  switch (strategy.kind) {
    case PairingStrategy::Kind::Top1:
      return {scored[best]};
    case PairingStrategy::Kind::TopK: {
      std::vector<PairedText> ranked = scored;
      std::stable_sort(ranked.begin(), ranked.end(),
                       [](const PairedText& a, const PairedText& b) { return a.similarity > b.similarity; });
      ranked.resize(std::min(ranked.size(), static_cast<std::size_t>(std::max(strategy.k, 1))));
      return ranked;
    }
    case PairingStrategy::Kind::Neighbor: {
      const std::size_t lo = best == 0 ? 0 : best - 1;
      const std::size_t hi = std::min(best + 1, scored.size() - 1);
      return {scored.begin() + static_cast<std::ptrdiff_t>(lo), scored.begin() + static_cast<std::ptrdiff_t>(hi) + 1};
    }
  }
  return {scored[best]};
}

nlohmann::ordered_json pair_record(std::string_view doc_id, const PairedSample& sample) {
  nlohmann::ordered_json j;
  j["doc_id"] = doc_id;
  j["image_asset"] = sample.image_asset;
  j["strategy"] = to_string(sample.strategy);
  j["texts"] = nlohmann::ordered_json::array();
  for (const auto& t : sample.texts) {
    nlohmann::ordered_json e;
    e["content"] = t.text.content;
    e["similarity"] = t.similarity;
    e["reading_order_index"] = t.reading_order_index;
    j["texts"].push_back(std::move(e));
  }
  return j;
}

}  // namespace pdfmine::pairing
