#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sunar {

/// Lowercases ASCII letters and splits on every byte that is not an ASCII
/// letter or digit. Bytes >= 0x80 are kept inside tokens so UTF-8 words
/// survive intact. Empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string trim(std::string_view s);

/// Replaces CRLF / CR with LF, strips trailing whitespace on every line and
/// at the end of the text.
std::string normalize_prompt(std::string_view text);

std::uint64_t fnv1a64(std::string_view data);

/// "fp:" followed by 16 lowercase hex digits.
std::string fingerprint_of(std::string_view normalized);

bool starts_with_icase(std::string_view text, std::string_view prefix);

/// Position of the first case-insensitive occurrence of needle, or npos.
std::size_t find_icase(std::string_view haystack, std::string_view needle, std::size_t from = 0);

}  // namespace sunar
