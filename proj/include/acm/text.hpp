#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace acm {

// All offsets and lengths in the engine are counted in Unicode scalar values,
// never bytes. Strings themselves are UTF-8. Invalid bytes are tolerated and
// count as one scalar value each.

inline constexpr std::size_t text_npos = static_cast<std::size_t>(-1);

std::size_t cp_count(std::string_view text);

// Byte offset of the cp_index-th scalar value. cp_index == cp_count(text)
// maps to text.size(); anything beyond that is clamped to text.size().
std::size_t cp_to_byte(std::string_view text, std::size_t cp_index);

// Scalar index of the scalar containing byte_offset.
std::size_t byte_to_cp(std::string_view text, std::size_t byte_offset);

std::string cp_substr(std::string_view text, std::size_t cp_pos,
                      std::size_t cp_len = text_npos);

// Scalar offset of the first occurrence of needle at or after cp_from.
// Matches are only reported at scalar boundaries. Empty needles never match.
std::size_t cp_find(std::string_view haystack, std::string_view needle,
                    std::size_t cp_from = 0);

// Default token estimate: chars/4, rounded up. Real token counts are
// tokenizer-specific; budgets here only need a stable, monotone proxy.
std::size_t heuristic_token_count(std::string_view text);

}  // namespace acm
