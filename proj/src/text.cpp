#include "sunar/text.hpp"

#include <cctype>
#include <cstdio>

namespace sunar {

namespace {

bool is_token_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

char lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (is_token_byte(c)) {
            current.push_back(c < 0x80 ? lower(ch) : ch);
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

std::string trim(std::string_view s) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string normalize_prompt(std::string_view text) {
    std::string unified;
    unified.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\r') {
            unified.push_back('\n');
            if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        } else {
            unified.push_back(text[i]);
        }
    }
    std::string out;
    out.reserve(unified.size());
    std::size_t start = 0;
    while (start <= unified.size()) {
        auto nl = unified.find('\n', start);
        auto line = std::string_view(unified).substr(
            start, nl == std::string::npos ? std::string::npos : nl - start);
        auto end = line.size();
        while (end > 0 && (line[end - 1] == ' ' || line[end - 1] == '\t')) --end;
        out.append(line.substr(0, end));
        if (nl == std::string::npos) break;
        out.push_back('\n');
        start = nl + 1;
    }
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back())) != 0) out.pop_back();
    return out;
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (char c : data) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fingerprint_of(std::string_view normalized) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "fp:%016llx",
                  static_cast<unsigned long long>(fnv1a64(normalized)));
    return buf;
}

bool starts_with_icase(std::string_view text, std::string_view prefix) {
    if (text.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (lower(text[i]) != lower(prefix[i])) return false;
    }
    return true;
}

std::size_t find_icase(std::string_view haystack, std::string_view needle, std::size_t from) {
    if (needle.empty()) return from <= haystack.size() ? from : std::string_view::npos;
    for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
        if (starts_with_icase(haystack.substr(i), needle)) return i;
    }
    return std::string_view::npos;
}

}  // namespace sunar
