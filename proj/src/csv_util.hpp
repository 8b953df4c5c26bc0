#pragma once

// Small helpers shared by the CSV readers and writers.

#include <sfmap/error.hpp>

#include <charconv>
#include <cstdio>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace sfmap::detail {

/// Round-trippable decimal form of a double.
inline std::string format_double(double value)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

inline std::vector<std::string> split_csv(std::string_view line)
{
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string> fields;
    size_t start = 0;
    for (;;) {
        const size_t comma = line.find(',', start);
        fields.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

inline double parse_double(std::string_view text, std::int64_t line)
{
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError("malformed number '" + std::string(text) + "'", line);
    }
    return value;
}

inline long long parse_integer(std::string_view text, std::int64_t line)
{
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError("malformed integer '" + std::string(text) + "'", line);
    }
    return value;
}

/// Reads the next line into @p fields; false at end of input.
inline bool next_csv_row(std::istream& in, std::vector<std::string>& fields, std::int64_t& line)
{
    std::string text;
    while (std::getline(in, text)) {
        ++line;
        if (text.empty() || text == "\r") continue;
        fields = split_csv(text);
        return true;
    }
    return false;
}

} // namespace sfmap::detail
