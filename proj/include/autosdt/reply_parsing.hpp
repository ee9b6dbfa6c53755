#pragma once

#include <autosdt/errors.hpp>
#include <autosdt/strings.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace autosdt {

// Total parsers for structured model replies. They accept arbitrary bytes and
// either return a value or throw MalformedReply/NoCodeBlock — never anything
// else. When a field or fence appears several times, the last occurrence wins
// (models tend to restate the format first and answer last).

namespace detail {

inline bool is_word_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Position just past "<field>:" for the last occurrence of the field name
// (case-insensitive, word-bounded, optional spaces before the colon).
inline std::optional<size_t> find_field_value(std::string_view reply, std::string_view field) {
    if (field.empty()) return std::nullopt;
    std::string haystack = to_lower(reply);
    std::string needle = to_lower(field);
    std::optional<size_t> best;
    size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        size_t after = pos + needle.size();
        bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
        size_t colon = after;
        while (colon < haystack.size() && (haystack[colon] == ' ' || haystack[colon] == '\t'))
            ++colon;
        if (left_ok && colon < haystack.size() && haystack[colon] == ':') best = colon + 1;
        pos = after;
    }
    return best;
}

inline std::string strip_decoration(std::string item) {
    item = trim(item);
    while (!item.empty() && (item.front() == '"' || item.front() == '\'' || item.front() == '`' ||
                             item.front() == '*'))
        item.erase(item.begin());
    while (!item.empty() && (item.back() == '"' || item.back() == '\'' || item.back() == '`' ||
                             item.back() == '*' || item.back() == ','))
        item.pop_back();
    return trim(item);
}

// A line that introduces another reply field, e.g. "LINKS:" or "MODULE_PATHS:".
// URLs ("https://...") are list items, not fields.
inline bool looks_like_field_line(std::string_view line) {
    std::string t = trim(line);
    size_t i = 0;
    while (i < t.size() && is_word_char(t[i])) ++i;
    if (i == 0) return false;
    while (i < t.size() && (t[i] == ' ' || t[i] == '\t')) ++i;
    if (i >= t.size() || t[i] != ':') return false;
    return t.substr(i + 1, 2) != "//";
}

} // namespace detail

// Scans for "<field>:" and reads the YES/NO token that follows.
inline bool parse_yes_no(std::string_view reply, std::string_view field) {
    auto at = detail::find_field_value(reply, field);
    if (!at) throw MalformedReply("field not found: " + std::string(field));
    size_t i = *at;
    while (i < reply.size() && !std::isalpha(static_cast<unsigned char>(reply[i])) &&
           reply[i] != '\n')
        ++i;
    size_t j = i;
    while (j < reply.size() && std::isalpha(static_cast<unsigned char>(reply[j]))) ++j;
    std::string token = to_lower(reply.substr(i, j - i));
    if (token == "yes") return true;
    if (token == "no") return false;
    throw MalformedReply("field " + std::string(field) + " is not YES/NO: '" + token + "'");
}

// Extracts a list following "<field>:". Accepts a bracketed list (possibly
// spanning lines), items on the remainder of the line, or one item per
// following line until a blank line or the next field.
inline std::vector<std::string> parse_path_list(std::string_view reply, std::string_view field) {
    auto at = detail::find_field_value(reply, field);
    if (!at) throw MalformedReply("field not found: " + std::string(field));
    size_t i = *at;
    while (i < reply.size() && (reply[i] == ' ' || reply[i] == '\t')) ++i;

    std::vector<std::string> raw;
    if (i < reply.size() && reply[i] == '[') {
        size_t close = reply.find(']', i + 1);
        std::string_view inner = close == std::string_view::npos
                                     ? reply.substr(i + 1)
                                     : reply.substr(i + 1, close - i - 1);
        for (auto& part : split(std::string(inner), ','))
            for (auto& piece : split_lines(part)) raw.push_back(piece);
    } else {
        size_t eol = reply.find('\n', i);
        std::string rest{eol == std::string_view::npos ? reply.substr(i)
                                                       : reply.substr(i, eol - i)};
        if (!trim(rest).empty()) {
            for (auto& part : split(rest, ',')) raw.push_back(part);
        } else if (eol != std::string_view::npos) {
            for (const auto& line : split_lines(reply.substr(eol + 1))) {
                if (trim(line).empty()) break;
                if (detail::looks_like_field_line(line)) break;
                std::string body = trim(line);
                if (starts_with(body, "- ") || starts_with(body, "* ")) body = body.substr(2);
                for (auto& part : split(body, ',')) raw.push_back(part);
            }
        }
    }

    std::vector<std::string> out;
    for (auto& item : raw) {
        std::string cleaned = detail::strip_decoration(item);
        if (!cleaned.empty()) out.push_back(cleaned);
    }
    return out;
}

// Contents of the last fenced code block. Blocks tagged with the scripting
// language are preferred; untagged fences are a fallback. An unterminated
// fence runs to the end of the reply.
inline std::string extract_code_block(std::string_view reply) {
    struct Block {
        std::string info;
        std::string body;
    };
    std::vector<Block> blocks;
    std::vector<std::string> lines = split_lines(reply);
    std::optional<Block> open;
    for (const auto& line : lines) {
        std::string t = trim(line);
        if (starts_with(t, "```")) {
            if (open) {
                if (!open->body.empty() && open->body.back() == '\n') open->body.pop_back();
                blocks.push_back(*open);
                open.reset();
            } else {
                open = Block{to_lower(trim(t.substr(3))), ""};
            }
        } else if (open) {
            open->body += line;
            open->body += '\n';
        }
    }
    if (open) {
        if (!open->body.empty() && open->body.back() == '\n') open->body.pop_back();
        blocks.push_back(*open);
    }
    if (blocks.empty()) throw NoCodeBlock();
    for (auto it = blocks.rbegin(); it != blocks.rend(); ++it) {
        if (it->info == "python" || it->info == "py" || starts_with(it->info, "python"))
            return it->body;
    }
    return blocks.back().body;
}

} // namespace autosdt
