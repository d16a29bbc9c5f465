#pragma once

// CSV emission: '#'-prefixed key=value metadata lines, RFC-4180 quoting,
// shortest round-trip number formatting, atomic file replacement.

#include "camsim/errors.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace camsim {

/// Shortest decimal string that round-trips the double.
inline std::string format_number(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, ptr);
}

inline std::string csv_quote(std::string_view field) {
    const bool needs = field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

class CsvWriter {
public:
    CsvWriter& meta(std::string_view key, std::string_view value) {
        body_ += "# ";
        body_ += key;
        body_ += "=";
        body_ += value;
        body_ += "\n";
        return *this;
    }

    CsvWriter& meta(std::string_view key, double value) {
        return meta(key, format_number(value));
    }

    CsvWriter& header(const std::vector<std::string>& cols) {
        return raw_row(cols);
    }

    CsvWriter& row(const std::vector<double>& values) {
        std::string line;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) line += ',';
            line += format_number(values[i]);
        }
        body_ += line;
        body_ += '\n';
        return *this;
    }

    CsvWriter& raw_row(const std::vector<std::string>& fields) {
        std::string line;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) line += ',';
            line += csv_quote(fields[i]);
        }
        body_ += line;
        body_ += '\n';
        return *this;
    }

    [[nodiscard]] const std::string& str() const noexcept { return body_; }

private:
    std::string body_;
};

/// Write-then-rename so readers never observe a half-written artifact.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) raise(Errc::IoError, "cannot open " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) raise(Errc::IoError, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) raise(Errc::IoError, "rename failed for " + path.string() + ": " + ec.message());
}

}  // namespace camsim
