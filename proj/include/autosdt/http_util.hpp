#pragma once

#include <autosdt/errors.hpp>

#include <httplib.h>

#include <memory>
#include <string>
#include <utility>

namespace autosdt {

// Splits "https://host:port/some/prefix" into the origin httplib wants and
// the path prefix to prepend to every request path.
inline std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
    auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("base url lacks scheme: " + base_url);
    auto path_start = base_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {base_url, ""};
    std::string prefix = base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {base_url.substr(0, path_start), prefix};
}

inline std::unique_ptr<httplib::Client> make_http_client(const std::string& origin,
                                                         int timeout_s = 60) {
    auto client = std::make_unique<httplib::Client>(origin);
    client->set_connection_timeout(timeout_s, 0);
    client->set_read_timeout(timeout_s, 0);
    client->set_write_timeout(timeout_s, 0);
    client->set_follow_location(true);
    return client;
}

// Percent-encodes a query-string value (RFC 3986 unreserved set kept).
inline std::string url_encode(const std::string& value) {
    static const char* kHex = "0123456789ABCDEF";
    std::string out;
    out.reserve(value.size());
    for (unsigned char c : value) {
        bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                          (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.' || c == '~';
        if (unreserved) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xF]);
        }
    }
    return out;
}

} // namespace autosdt
