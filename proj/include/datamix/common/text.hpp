#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace datamix::text {

// Unicode NFC. Invalid UTF-8 sequences are replaced with U+FFFD.
std::string nfc(std::string_view utf8);

// Collapses runs of Unicode whitespace to one ASCII space and trims both ends.
std::string collapse_whitespace(std::string_view utf8);

// NFC followed by whitespace collapse: the canonical form used for hashing.
std::string normalize_for_hash(std::string_view utf8);

std::size_t codepoint_count(std::string_view utf8);

// Counts code points in the Unicode punctuation categories (Pc Pd Ps Pe Pi Pf Po).
std::size_t punctuation_count(std::string_view utf8);

// Whitespace-delimited tokens (ASCII whitespace).
std::vector<std::string_view> split_whitespace(std::string_view s);

// Maximal runs of non-blank lines; a blank line holds only whitespace.
std::vector<std::string_view> split_paragraphs(std::string_view s);

std::string ascii_lower(std::string_view s);

std::string_view trim(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);

}  // namespace datamix::text
