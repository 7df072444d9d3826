#include "pdfmine/pdf/filters.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstdlib>

#include "pdfmine/error.hpp"

namespace pdfmine::pdf {

namespace {

constexpr std::size_t kMaxDecodedBytes = 512u << 20;

int int_param(const Dict* params, std::string_view key, int fallback) {
  if (!params) return fallback;
  if (const Object* v = find(*params, key)) {
    if (auto n = v->integer()) return static_cast<int>(*n);
  }
  return fallback;
}

std::string apply_predictor(std::string data, const Dict* params) {
  const int predictor = int_param(params, "Predictor", 1);
  if (predictor <= 1) return data;
  const int colors = std::max(1, int_param(params, "Colors", 1));
  const int bpc = std::max(1, int_param(params, "BitsPerComponent", 8));
  const int columns = std::max(1, int_param(params, "Columns", 1));
  const std::size_t bpp = std::max<std::size_t>(1, static_cast<std::size_t>(colors * bpc + 7) / 8);
  const std::size_t row_len = (static_cast<std::size_t>(colors) * bpc * columns + 7) / 8;

  if (predictor == 2) {
    if (bpc != 8) return data;
    for (std::size_t row = 0; row + row_len <= data.size(); row += row_len) {
      for (std::size_t i = bpp; i < row_len; ++i) {
        data[row + i] = static_cast<char>(static_cast<std::uint8_t>(data[row + i]) +
                                          static_cast<std::uint8_t>(data[row + i - bpp]));
      }
    }
    return data;
  }

  std::string out;
  out.reserve(data.size());
  std::string prev(row_len, '\0');
  std::size_t pos = 0;
  while (pos < data.size()) {
    const auto type = static_cast<std::uint8_t>(data[pos++]);
    std::string row(row_len, '\0');
    const std::size_t n = std::min(row_len, data.size() - pos);
    row.replace(0, n, data, pos, n);
    pos += n;
    for (std::size_t i = 0; i < row_len; ++i) {
      const int left = i >= bpp ? static_cast<std::uint8_t>(row[i - bpp]) : 0;
      const int up = static_cast<std::uint8_t>(prev[i]);
      const int upleft = i >= bpp ? static_cast<std::uint8_t>(prev[i - bpp]) : 0;
      int value = static_cast<std::uint8_t>(row[i]);
      switch (type) {
        case 0: break;
        case 1: value += left; break;
        case 2: value += up; break;
        case 3: value += (left + up) / 2; break;
        case 4: {
          const int p = left + up - upleft;
          const int pa = std::abs(p - left), pb = std::abs(p - up), pc = std::abs(p - upleft);
          value += (pa <= pb && pa <= pc) ? left : (pb <= pc ? up : upleft);
          break;
        }
        default:
          throw Error(ErrorCode::ParseFailure, "bad png predictor row type");
      }
      row[i] = static_cast<char>(value & 0xFF);
    }
    out += row;
    prev = std::move(row);
  }
  return out;
}

std::string ascii_hex_decode(std::string_view data) {
  std::string out;
  int pending = -1;
  for (char c : data) {
    if (c == '>') break;
    int v = -1;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else if (c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\0') continue;
    else throw Error(ErrorCode::ParseFailure, "bad ASCIIHex data");
    if (pending < 0) {
      pending = v;
    } else {
      out.push_back(static_cast<char>(pending * 16 + v));
      pending = -1;
    }
  }
  if (pending >= 0) out.push_back(static_cast<char>(pending * 16));
  return out;
}

std::string ascii85_decode(std::string_view data) {
  std::string out;
  std::uint32_t tuple = 0;
  int count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const char c = data[i];
    if (c == '~') break;
    if (c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\0') continue;
    if (c == 'z' && count == 0) {
      out.append(4, '\0');
      continue;
    }
    if (c < '!' || c > 'u') throw Error(ErrorCode::ParseFailure, "bad ASCII85 data");
    tuple = tuple * 85 + static_cast<std::uint32_t>(c - '!');
    if (++count == 5) {
      for (int k = 3; k >= 0; --k) out.push_back(static_cast<char>((tuple >> (8 * k)) & 0xFF));
      tuple = 0;
      count = 0;
    }
  }
  if (count > 1) {
    for (int k = count; k < 5; ++k) tuple = tuple * 85 + 84;
    for (int k = 0; k < count - 1; ++k) out.push_back(static_cast<char>((tuple >> (8 * (3 - k))) & 0xFF));
  }
  return out;
}

std::string run_length_decode(std::string_view data) {
  std::string out;
  std::size_t i = 0;
  while (i < data.size()) {
    const auto len = static_cast<std::uint8_t>(data[i++]);
    if (len == 128) break;
    if (len < 128) {
      const std::size_t n = std::min<std::size_t>(len + 1u, data.size() - i);
      out.append(data.substr(i, n));
      i += n;
    } else if (i < data.size()) {
      out.append(257u - len, data[i++]);
    }
  }
  return out;
}

std::string lzw_decode(std::string_view data, int early_change) {
  std::vector<std::string> table;
  auto reset = [&] {
    table.clear();
    for (int i = 0; i < 256; ++i) table.emplace_back(1, static_cast<char>(i));
    table.emplace_back();  // 256 clear
    table.emplace_back();  // 257 eod
  };
  reset();
  std::string out;
  int code_len = 9;
  std::uint32_t buffer = 0;
  int bits = 0;
  std::size_t pos = 0;
  int prev = -1;
  for (;;) {
    while (bits < code_len && pos < data.size()) {
      buffer = (buffer << 8) | static_cast<std::uint8_t>(data[pos++]);
      bits += 8;
    }
    if (bits < code_len) break;
    const int code = static_cast<int>((buffer >> (bits - code_len)) & ((1u << code_len) - 1));
    bits -= code_len;
    if (code == 256) {
      reset();
      code_len = 9;
      prev = -1;
      continue;
    }
    if (code == 257) break;
    std::string entry;
    if (code < static_cast<int>(table.size())) {
      entry = table[static_cast<std::size_t>(code)];
      if (prev >= 0) table.push_back(table[static_cast<std::size_t>(prev)] + entry[0]);
    } else if (prev >= 0 && code == static_cast<int>(table.size())) {
      const std::string& p = table[static_cast<std::size_t>(prev)];
      entry = p + p[0];
      table.push_back(entry);
    } else {
      throw Error(ErrorCode::ParseFailure, "bad LZW code");
    }
    out += entry;
    if (out.size() > kMaxDecodedBytes) throw Error(ErrorCode::ParseFailure, "decoded stream too large");
    prev = code;
    const int size = static_cast<int>(table.size()) + early_change;
    if (size >= 4096) code_len = 12;
    else if (size >= 2048) code_len = 12;
    else if (size >= 1024) code_len = 11;
    else if (size >= 512) code_len = 10;
  }
  return out;
}

}  // namespace

std::string flate_decode(std::string_view data) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw Error(ErrorCode::ParseFailure, "inflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out;
  char buf[16384];
  bool failed = false;
  for (;;) {
    zs.next_out = reinterpret_cast<Bytef*>(buf);
    zs.avail_out = sizeof(buf);
    const int rc = inflate(&zs, Z_NO_FLUSH);
    out.append(buf, sizeof(buf) - zs.avail_out);
    if (out.size() > kMaxDecodedBytes) {
      inflateEnd(&zs);
      throw Error(ErrorCode::ParseFailure, "decoded stream too large");
    }
    if (rc == Z_STREAM_END) break;
    if (rc == Z_OK) continue;
    // Truncated or trailing-garbage streams keep whatever decoded cleanly.
    failed = !(rc == Z_BUF_ERROR && zs.avail_in == 0) || out.empty();
    break;
  }
  inflateEnd(&zs);
  if (failed && out.empty()) throw Error(ErrorCode::ParseFailure, "corrupt flate data");
  return out;
}

std::string flate_encode(std::string_view data, int level) {
  uLongf bound = compressBound(static_cast<uLong>(data.size()));
  std::string out(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(out.data()), &bound, reinterpret_cast<const Bytef*>(data.data()),
                static_cast<uLong>(data.size()), level) != Z_OK) {
    throw Error(ErrorCode::IoFailure, "deflate failed");
  }
  out.resize(bound);
  return out;
}

DecodeResult apply_filters(std::string_view raw, const std::vector<FilterStep>& steps) {
  DecodeResult result;
  result.data = std::string(raw);
  for (const auto& step : steps) {
    const std::string& f = step.name;
    if (f == "FlateDecode" || f == "Fl") {
      result.data = apply_predictor(flate_decode(result.data), step.params);
    } else if (f == "LZWDecode" || f == "LZW") {
      result.data = apply_predictor(lzw_decode(result.data, int_param(step.params, "EarlyChange", 1)), step.params);
    } else if (f == "ASCIIHexDecode" || f == "AHx") {
      result.data = ascii_hex_decode(result.data);
    } else if (f == "ASCII85Decode" || f == "A85") {
      result.data = ascii85_decode(result.data);
    } else if (f == "RunLengthDecode" || f == "RL") {
      result.data = run_length_decode(result.data);
    } else if (f == "DCTDecode" || f == "DCT" || f == "JPXDecode" || f == "CCITTFaxDecode" || f == "CCF" ||
               f == "JBIG2Decode") {
      result.pending_codec = f == "DCT" ? "DCTDecode" : (f == "CCF" ? "CCITTFaxDecode" : f);
      result.pending_params = step.params;
      return result;
    } else if (f == "Crypt") {
      continue;
    } else {
      throw Error(ErrorCode::ParseFailure, "unsupported filter " + f);
    }
  }
  return result;
}

}  // namespace pdfmine::pdf
