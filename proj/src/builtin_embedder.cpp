#include "pdfmine/builtin_providers.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "pdfmine/error.hpp"
#include "pdfmine/util/hash.hpp"
#include "pdfmine/util/utf8.hpp"

namespace pdfmine {

namespace {

char32_t fold(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  if (cp >= 0xFF21 && cp <= 0xFF3A) return cp - 0xFF21 + U'a';  // full-width Latin
  if (cp >= 0xFF41 && cp <= 0xFF5A) return cp - 0xFF41 + U'a';
  if (cp >= 0xFF10 && cp <= 0xFF19) return cp - 0xFF10 + U'0';
  return cp;
}

struct NamedColour {
  const char* name;
  int r, g, b;
};

constexpr std::array<NamedColour, 10> kPalette = {{
    {"黒", 20, 20, 20},
    {"白", 240, 240, 240},
    {"灰色", 128, 128, 128},
    {"赤", 200, 40, 40},
    {"緑", 40, 160, 60},
    {"青", 40, 70, 200},
    {"黄色", 230, 210, 50},
    {"橙色", 235, 140, 40},
    {"紫", 130, 60, 160},
    {"茶色", 120, 80, 40},
}};

std::size_t nearest_colour(const std::uint8_t* px) {
  std::size_t best = 0;
  int best_d = 1 << 30;
  for (std::size_t i = 0; i < kPalette.size(); ++i) {
    const int dr = px[0] - kPalette[i].r, dg = px[1] - kPalette[i].g, db = px[2] - kPalette[i].b;
    const int d = dr * dr + dg * dg + db * db;
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

BuiltinEmbedder::BuiltinEmbedder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ <= 0) throw Error(ErrorCode::ConfigInvalid, "embedding dimension must be positive");
}

std::string BuiltinEmbedder::id() const { return "builtin-hash/" + std::to_string(dim_); }

void BuiltinEmbedder::add_feature(std::vector<double>& v, std::string_view feature, double weight) const {
  const std::uint64_t h = util::fnv1a64(feature, seed_);
  const double sign = (h >> 63) ? -1.0 : 1.0;
  v[static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim_))] += sign * weight;
}

void BuiltinEmbedder::finish(std::vector<double>& v, std::string_view fallback) const {
  double norm = 0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm < 1e-12) {
    // All features cancelled out; fall back to a single hashed coordinate.
    std::fill(v.begin(), v.end(), 0.0);
    add_feature(v, fallback, 1.0);
    return;
  }
  for (double& x : v) x /= norm;
}

std::vector<double> BuiltinEmbedder::embed_text(std::string_view text) {
  std::vector<double> v(static_cast<std::size_t>(dim_), 0.0);
  std::u32string cps;
  for (char32_t cp : util::utf8_decode(text)) {
    if (!util::is_space(cp)) cps.push_back(fold(cp));
  }
  for (std::size_t i = 0; i < cps.size(); ++i) {
    add_feature(v, "u:" + util::utf8_encode(cps.substr(i, 1)), 1.0);
    if (i + 1 < cps.size()) add_feature(v, "b:" + util::utf8_encode(cps.substr(i, 2)), 0.5);
  }
  finish(v, "text:" + std::string(text));
  return v;
}

std::vector<double> BuiltinEmbedder::embed_image(const RgbImage& image) {
  if (image.empty()) throw Error(ErrorCode::EmptyInput, "empty image");
  std::vector<double> v(static_cast<std::size_t>(dim_), 0.0);
  const double total = static_cast<double>(image.width) * image.height;

  std::array<double, 64> hist{};
  std::array<double, 16> grid{};
  std::array<double, 16> grid_count{};
  std::array<double, kPalette.size()> named{};
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::uint8_t* px = image.at(x, y);
      hist[static_cast<std::size_t>((px[0] >> 6) * 16 + (px[1] >> 6) * 4 + (px[2] >> 6))] += 1;
      const std::size_t cell = static_cast<std::size_t>((y * 4 / image.height) * 4 + x * 4 / image.width);
      grid[cell] += (0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0;
      grid_count[cell] += 1;
      named[nearest_colour(px)] += 1;
    }
  }
  for (std::size_t i = 0; i < hist.size(); ++i) {
    if (hist[i] > 0) add_feature(v, "c:" + std::to_string(i), hist[i] / total);
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid_count[i] > 0) add_feature(v, "g:" + std::to_string(i), 0.25 * grid[i] / grid_count[i]);
  }
  // Colour words share the text feature space, so captions naming the colour score higher.
  for (std::size_t i = 0; i < named.size(); ++i) {
    if (named[i] == 0) continue;
    const auto word = util::utf8_decode(kPalette[i].name);
    for (std::size_t j = 0; j < word.size(); ++j) {
      add_feature(v, "u:" + util::utf8_encode(word.substr(j, 1)), named[i] / total);
    }
  }
  finish(v, "image:" + std::to_string(image.width) + "x" + std::to_string(image.height));
  return v;
}

std::string dominant_colour_name(const RgbImage& image) {
  if (image.empty()) return kPalette[1].name;
  std::array<long long, kPalette.size()> counts{};
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) ++counts[nearest_colour(image.at(x, y))];
  }
  const auto it = std::max_element(counts.begin(), counts.end());
  return kPalette[static_cast<std::size_t>(it - counts.begin())].name;
}

}  // namespace pdfmine
