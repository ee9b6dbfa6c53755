#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace autosdt {

inline bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline bool contains(std::string_view s, std::string_view needle) {
    return s.find(needle) != std::string_view::npos;
}

inline bool contains_ci(std::string_view s, std::string_view needle) {
    return contains(to_lower(s), to_lower(needle));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> out = split(s, '\n');
    if (!s.empty() && s.back() == '\n') out.pop_back(); // no phantom line after a final newline
    for (auto& line : out) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

inline std::string replace_all(std::string s, std::string_view from, std::string_view to) {
    if (from.empty()) return s;
    size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

// Keeps the head of oversized free text and appends a marker. Used for README
// bodies and file trees before they go into a prompt; never applied to code.
inline std::string truncate_tail(std::string_view text, size_t max_chars,
                                 std::string_view marker = "\n[... truncated ...]") {
    if (text.size() <= max_chars) return std::string(text);
    return std::string(text.substr(0, max_chars)) + std::string(marker);
}

// Last `max_bytes` of a stream capture (error tails shown to the model and
// stored on adaptation states).
inline std::string tail_bytes(std::string_view text, size_t max_bytes) {
    if (text.size() <= max_bytes) return std::string(text);
    return std::string(text.substr(text.size() - max_bytes));
}

// Number of lines in a source file: newline-terminated lines plus a trailing
// unterminated one. Empty text has zero lines.
inline size_t count_lines(std::string_view text) {
    if (text.empty()) return 0;
    size_t n = static_cast<size_t>(std::count(text.begin(), text.end(), '\n'));
    if (text.back() != '\n') ++n;
    return n;
}

} // namespace autosdt
