#include "acm/text.hpp"

#include <algorithm>

namespace acm {
namespace {

// Length of the scalar starting at position i, clamped so truncated or
// invalid sequences advance by one byte.
std::size_t scalar_len(std::string_view text, std::size_t i) {
  const auto b = static_cast<unsigned char>(text[i]);
  std::size_t want = 1;
  if ((b & 0x80u) == 0x00u) {
    want = 1;
  } else if ((b & 0xE0u) == 0xC0u) {
    want = 2;
  } else if ((b & 0xF0u) == 0xE0u) {
    want = 3;
  } else if ((b & 0xF8u) == 0xF0u) {
    want = 4;
  } else {
    return 1;  // stray continuation byte
  }
  if (i + want > text.size()) return 1;
  for (std::size_t k = 1; k < want; ++k) {
    if ((static_cast<unsigned char>(text[i + k]) & 0xC0u) != 0x80u) return 1;
  }
  return want;
}

bool is_boundary(std::string_view text, std::size_t byte_pos) {
  if (byte_pos == 0 || byte_pos >= text.size()) return true;
  // Walking from the previous lead byte is enough: scalars are at most 4 bytes.
  std::size_t start = byte_pos >= 4 ? byte_pos - 4 : 0;
  std::size_t i = start;
  // Resynchronize on a boundary at or before `start`.
  while (i > 0 &&
         (static_cast<unsigned char>(text[i]) & 0xC0u) == 0x80u) {
    --i;
  }
  while (i < byte_pos) i += scalar_len(text, i);
  return i == byte_pos;
}

}  // namespace

std::size_t cp_count(std::string_view text) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < text.size(); i += scalar_len(text, i)) ++n;
  return n;
}

std::size_t cp_to_byte(std::string_view text, std::size_t cp_index) {
  std::size_t i = 0;
  std::size_t n = 0;
  while (i < text.size() && n < cp_index) {
    i += scalar_len(text, i);
    ++n;
  }
  return i;
}

std::size_t byte_to_cp(std::string_view text, std::size_t byte_offset) {
  byte_offset = std::min(byte_offset, text.size());
  std::size_t i = 0;
  std::size_t n = 0;
  while (i < byte_offset) {
    i += scalar_len(text, i);
    ++n;
  }
  return n;
}

std::string cp_substr(std::string_view text, std::size_t cp_pos,
                      std::size_t cp_len) {
  const std::size_t b0 = cp_to_byte(text, cp_pos);
  if (cp_len == text_npos) return std::string(text.substr(b0));
  std::size_t b1 = b0;
  std::size_t taken = 0;
  while (b1 < text.size() && taken < cp_len) {
    b1 += scalar_len(text, b1);
    ++taken;
  }
  return std::string(text.substr(b0, b1 - b0));
}

std::size_t cp_find(std::string_view haystack, std::string_view needle,
                    std::size_t cp_from) {
  if (needle.empty()) return text_npos;
  std::size_t pos = haystack.find(needle, cp_to_byte(haystack, cp_from));
  while (pos != std::string_view::npos) {
    if (is_boundary(haystack, pos)) return byte_to_cp(haystack, pos);
    pos = haystack.find(needle, pos + 1);
  }
  return text_npos;
}

std::size_t heuristic_token_count(std::string_view text) {
  return (cp_count(text) + 3) / 4;
}

}  // namespace acm
