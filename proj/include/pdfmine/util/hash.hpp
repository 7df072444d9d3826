#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pdfmine::util {

/// Lower-case hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// 64-bit FNV-1a; `seed` is mixed into the offset basis.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace pdfmine::util
