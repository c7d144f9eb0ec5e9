#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "aekit/errors.hpp"

namespace aekit {

// Number of UTF-8 scalar values in `bytes`, counted as non-continuation
// bytes. A token holding only continuation bytes (a byte-level tokenizer may
// split a multi-byte character) still counts as one typed character.
inline std::size_t char_count(std::string_view bytes) {
  if (bytes.empty()) return 0;
  std::size_t n = 0;
  for (unsigned char c : bytes)
    if ((c & 0xC0) != 0x80) ++n;
  return n > 0 ? n : 1;
}

inline bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    std::size_t extra;
    if (c < 0x80) extra = 0;
    else if ((c >> 5) == 0x6) extra = 1;
    else if ((c >> 4) == 0xE) extra = 2;
    else if ((c >> 3) == 0x1E) extra = 3;
    else return false;
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k)
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    i += extra + 1;
  }
  return true;
}

// Maps each raw byte to the code point U+0000..U+00FF. The result is always
// valid UTF-8, and ASCII input is unchanged. Inverse of utf8_to_bytes.
inline std::string bytes_to_utf8(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  for (unsigned char b : bytes) {
    if (b < 0x80) {
      out.push_back(static_cast<char>(b));
    } else {
      out.push_back(static_cast<char>(0xC0 | (b >> 6)));
      out.push_back(static_cast<char>(0x80 | (b & 0x3F)));
    }
  }
  return out;
}

inline std::string utf8_to_bytes(std::string_view u8) {
  std::string out;
  out.reserve(u8.size());
  std::size_t i = 0;
  while (i < u8.size()) {
    unsigned char c = u8[i];
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
      ++i;
    } else if ((c >> 5) == 0x6 && i + 1 < u8.size()) {
      unsigned int cp = ((c & 0x1F) << 6) | (static_cast<unsigned char>(u8[i + 1]) & 0x3F);
      if (cp > 0xFF)
        throw DataError("string is not byte-representable (code point above U+00FF)");
      out.push_back(static_cast<char>(cp));
      i += 2;
    } else {
      throw DataError("string is not byte-representable (code point above U+00FF)");
    }
  }
  return out;
}

// Splits into UTF-8 scalar chunks; malformed bytes come back one at a time.
inline std::vector<std::string_view> utf8_chars(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    std::size_t len = 1;
    if ((c >> 5) == 0x6) len = 2;
    else if ((c >> 4) == 0xE) len = 3;
    else if ((c >> 3) == 0x1E) len = 4;
    if (i + len > s.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.push_back(s.substr(i, len));
    i += len;
  }
  return out;
}

inline std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// FNV-1a over a byte stream; used for the reproducibility header.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace aekit
