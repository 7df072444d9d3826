#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pdfmine::testing {

struct FixtureImage {
  double x = 0, y = 0, w = 100, h = 100;  // placement in PDF points (origin bottom-left)
  int px_w = 32, px_h = 32;               // sample grid
  std::uint8_t r = 200, g = 60, b = 60;   // base colour of a deterministic gradient
  bool flate = true;
  bool placed = true;  // false: declared in resources but never drawn
};

struct FixtureText {
  double x = 72, y = 700, size = 12;
  std::string text;  // UTF-8
  bool cjk = true;   // Type0/Identity-H with ToUnicode, else Helvetica/WinAnsi (ASCII only)
};

struct FixturePage {
  double width = 595.28, height = 841.89;  // A4
  std::vector<FixtureImage> images;
  std::vector<FixtureText> texts;
  bool corrupt_content = false;
};

/// Writes a small but well-formed PDF with a classic xref table.
std::string build_pdf(const std::vector<FixturePage>& pages);

}  // namespace pdfmine::testing
