#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "wist/error.hpp"

namespace wist::utf8 {

// Splits a UTF-8 string into code points, each kept as its own byte string.
inline std::vector<std::string> split_chars(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    auto lead = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = 3;
    } else if (lead >= 0xC0) {
      len = 2;
    } else if (lead >= 0x80) {
      throw DataError("invalid UTF-8 lead byte at offset " + std::to_string(i));
    }
    if (i + len > s.size()) {
      throw DataError("truncated UTF-8 sequence at offset " + std::to_string(i));
    }
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) {
        throw DataError("invalid UTF-8 continuation byte at offset " + std::to_string(i + k));
      }
    }
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

inline std::size_t length(std::string_view s) { return split_chars(s).size(); }

inline std::string join(const std::vector<std::string>& chars) {
  std::string out;
  for (const auto& c : chars) out += c;
  return out;
}

}  // namespace wist::utf8
