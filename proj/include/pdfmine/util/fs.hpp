#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace pdfmine::util {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file then renames over `path`, so readers never
/// observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Appends one line (a trailing '\n' is added) and flushes.
void append_line(const std::filesystem::path& path, std::string_view line);

}  // namespace pdfmine::util
