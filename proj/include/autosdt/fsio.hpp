#pragma once

#include <autosdt/errors.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace autosdt {

namespace fs = std::filesystem;

inline std::optional<std::string> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) return std::nullopt;
    return buf.str();
}

inline std::string read_file_or_throw(const fs::path& path) {
    auto text = read_file(path);
    if (!text) throw Error("cannot read file: " + path.string());
    return *text;
}

inline void write_file(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open file for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed: " + path.string());
}

inline void append_line(const fs::path& path, std::string_view line) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot open file for appending: " + path.string());
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.put('\n');
    out.flush();
    if (!out) throw Error("append failed: " + path.string());
}

// All regular files under `root` as sorted generic-form relative paths.
// Symlinks are never followed; VCS metadata directories are skipped.
inline std::vector<std::string> list_files(const fs::path& root) {
    std::vector<std::string> out;
    if (!fs::exists(root)) return out;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied);
    for (auto end = fs::recursive_directory_iterator(); it != end; ++it) {
        const auto& entry = *it;
        if (entry.is_symlink()) {
            if (entry.is_directory()) it.disable_recursion_pending();
            continue;
        }
        if (entry.is_directory()) {
            if (entry.path().filename() == ".git") it.disable_recursion_pending();
            continue;
        }
        if (!entry.is_regular_file()) continue;
        out.push_back(fs::relative(entry.path(), root).generic_string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Rejects path text that could escape a rooted tree when joined onto it.
inline bool is_safe_relative_path(std::string_view rel) {
    if (rel.empty()) return false;
    fs::path p{std::string(rel)};
    if (p.is_absolute()) return false;
    for (const auto& part : p) {
        if (part == "..") return false;
    }
    return true;
}

inline void copy_file_preserving(const fs::path& src, const fs::path& dst) {
    if (dst.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(dst.parent_path(), ec);
    }
    std::error_code ec;
    fs::copy_file(src, dst, fs::copy_options::overwrite_existing, ec);
    if (ec) throw Error("copy failed: " + src.string() + " -> " + dst.string() + ": " + ec.message());
}

} // namespace autosdt
