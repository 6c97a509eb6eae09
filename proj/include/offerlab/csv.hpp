#pragma once

// RFC-4180 CSV reading and writing, exact number formatting, and atomic
// file writes.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "errors.hpp"

namespace offerlab {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_lines;  // 1-based line where each row starts

    /// Column index by name; throws ParseError naming the missing column.
    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ParseError("missing column '" + std::string(name) + "'", 1);
    }
};

/// Parses CSV text. Quoted fields may contain commas, doubled quotes and
/// line breaks. A UTF-8 BOM is skipped. Every row must have the header's
/// field count.
inline CsvTable parse_csv(std::string_view text) {
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    CsvTable t;
    std::vector<std::string> record;
    std::string field;
    std::size_t line = 1, record_line = 1;
    bool in_quotes = false, field_quoted = false, any = false;
    auto end_record = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_quoted = false;
        const bool blank = record.size() == 1 && record[0].empty();
        if (!blank) {
            if (t.header.empty()) {
                t.header = std::move(record);
            } else {
                if (record.size() != t.header.size())
                    throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                                         std::to_string(record.size()),
                                     record_line);
                t.rows.push_back(std::move(record));
                t.row_lines.push_back(record_line);
            }
        }
        record.clear();
        any = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (!any) {
            record_line = line;
            any = true;
        }
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty() || field_quoted) throw ParseError("stray quote inside a field", line);
                in_quotes = field_quoted = true;
                break;
            case ',':
                record.push_back(std::move(field));
                field.clear();
                field_quoted = false;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') break;
                end_record();
                ++line;
                break;
            case '\n':
                end_record();
                ++line;
                break;
            default:
                if (field_quoted) throw ParseError("text after a closing quote", line);
                field += c;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted field", record_line);
    if (any) end_record();
    if (t.header.empty()) throw ParseError("empty CSV: no header row", 1);
    return t;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DependencyError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline CsvTable read_csv(const std::filesystem::path& path) {
    try {
        return parse_csv(read_file(path));
    } catch (const ParseError& e) {
        std::string what = e.what();
        what.erase(0, what.find(": ") + 2);  // ParseError adds the line prefix again
        throw ParseError(what + " in '" + path.string() + "'", e.line_number);
    }
}

inline std::string csv_escape(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::string csv_line(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(fields[i]);
    }
    return out + '\n';
}

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    if (v == 0.0) v = 0.0;  // drop the sign of negative zero
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Fixed-point text for reports.
inline std::string format_fixed(double v, int digits) {
    if (!std::isfinite(v)) return format_double(v);
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
    std::string s(buf, res.ptr);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

inline double parse_double(std::string_view s, std::size_t line, std::string_view what) {
    if (s == "NaN") return std::nan("");
    if (s == "Inf") return HUGE_VAL;
    if (s == "-Inf") return -HUGE_VAL;
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s.front() == '+') ++first;
    auto res = std::from_chars(first, s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("bad number '" + std::string(s) + "' in " + std::string(what), line);
    return v;
}

inline long parse_long(std::string_view s, std::size_t line, std::string_view what) {
    long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ParseError("bad integer '" + std::string(s) + "' in " + std::string(what), line);
    return v;
}

/// Writes to a sibling temporary file, then renames over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error("cannot rename onto '" + path.string() + "': " + ec.message());
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::string out = csv_line(header);
    for (const auto& r : rows) out += csv_line(r);
    write_file_atomic(path, out);
}

}  // namespace offerlab
