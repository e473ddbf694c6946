#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

// Small helpers shared by the versioned text artifact formats.
namespace chronic::textio {

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_hex(std::uint64_t v) {
    char buf[17];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, 16);
    return std::string(buf, res.ptr);
}

template <typename T>
bool parse_number(std::string_view s, T& out, int base = 10) {
    std::from_chars_result res;
    if constexpr (std::is_floating_point_v<T>) {
        (void)base;
        res = std::from_chars(s.data(), s.data() + s.size(), out);
    } else {
        res = std::from_chars(s.data(), s.data() + s.size(), out, base);
    }
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

/// Parses "tag<TAB>key=value<TAB>key=value..." into the tag and a map.
inline std::string parse_header(std::string_view line, std::map<std::string, std::string>& fields) {
    auto parts = split(line, '\t');
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto eq = parts[i].find('=');
        if (eq == std::string_view::npos) continue;
        fields.emplace(std::string(parts[i].substr(0, eq)), std::string(parts[i].substr(eq + 1)));
    }
    return std::string(parts.empty() ? std::string_view{} : parts[0]);
}

}  // namespace chronic::textio
