#pragma once

// Strict structured config: [section] headers, key = value pairs, numbers,
// booleans, quoted strings and numeric lists. Unknown keys are fatal and
// reported with their source line, so typos cannot silently skew a study.

#include "camsim/errors.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace camsim {

struct ConfigValue {
    enum class Kind { Number, Bool, String, List };
    Kind kind = Kind::String;
    double num = 0.0;
    bool boolean = false;
    std::string str;
    std::vector<double> list;
    int line = 0;

    [[nodiscard]] std::string render() const {
        switch (kind) {
            case Kind::Number: {
                char buf[40];
                auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), num);
                return ec == std::errc{} ? std::string(buf, p) : "nan";
            }
            case Kind::Bool: return boolean ? "true" : "false";
            case Kind::String: return "\"" + str + "\"";
            case Kind::List: {
                std::string out = "[";
                for (std::size_t i = 0; i < list.size(); ++i) {
                    if (i) out += ", ";
                    char buf[40];
                    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), list[i]);
                    out.append(buf, ec == std::errc{} ? p : buf);
                }
                return out + "]";
            }
        }
        return "";
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::string_view strip_comment(std::string_view s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

inline bool parse_number(std::string_view s, double& out) {
    const std::string tmp(s);
    char* end = nullptr;
    out = std::strtod(tmp.c_str(), &end);
    return end && *end == '\0' && end != tmp.c_str();
}

inline ConfigValue parse_value(std::string_view raw, int line) {
    ConfigValue v;
    v.line = line;
    raw = trim(raw);
    if (raw.empty())
        raise(Errc::ConfigError, "empty value (line " + std::to_string(line) + ")");
    if (raw == "true" || raw == "false") {
        v.kind = ConfigValue::Kind::Bool;
        v.boolean = (raw == "true");
        return v;
    }
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"')
            raise(Errc::ConfigError, "unterminated string (line " + std::to_string(line) + ")");
        v.kind = ConfigValue::Kind::String;
        v.str = std::string(raw.substr(1, raw.size() - 2));
        return v;
    }
    if (raw.front() == '[') {
        if (raw.back() != ']')
            raise(Errc::ConfigError, "unterminated list (line " + std::to_string(line) + ")");
        v.kind = ConfigValue::Kind::List;
        std::string inner(raw.substr(1, raw.size() - 2));
        std::stringstream ss(inner);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::string_view it = trim(item);
            if (it.empty()) continue;
            double d = 0;
            if (!parse_number(it, d))
                raise(Errc::ConfigError,
                      "list element '" + std::string(it) + "' is not a number (line " +
                          std::to_string(line) + ")");
            v.list.push_back(d);
        }
        return v;
    }
    double d = 0;
    if (parse_number(raw, d)) {
        v.kind = ConfigValue::Kind::Number;
        v.num = d;
        return v;
    }
    v.kind = ConfigValue::Kind::String;  // bare word
    v.str = std::string(raw);
    return v;
}

}  // namespace detail

class Config {
public:
    static Config parse(std::string_view text) {
        Config c;
        std::string section;
        int line_no = 0;
        std::string line;
        std::stringstream ss{std::string(text)};
        while (std::getline(ss, line)) {
            ++line_no;
            std::string_view s = detail::trim(detail::strip_comment(line));
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    raise(Errc::ConfigError,
                          "bad section header (line " + std::to_string(line_no) + ")");
                section = std::string(detail::trim(s.substr(1, s.size() - 2)));
                if (section.empty())
                    raise(Errc::ConfigError,
                          "empty section name (line " + std::to_string(line_no) + ")");
                continue;
            }
            const std::size_t eq = s.find('=');
            if (eq == std::string_view::npos)
                raise(Errc::ConfigError,
                      "expected key = value (line " + std::to_string(line_no) + ")");
            const std::string key(detail::trim(s.substr(0, eq)));
            if (key.empty())
                raise(Errc::ConfigError, "empty key (line " + std::to_string(line_no) + ")");
            const std::string full = section.empty() ? key : section + "." + key;
            if (c.entries_.count(full))
                raise(Errc::ConfigError,
                      "duplicate key '" + full + "' (line " + std::to_string(line_no) + ")");
            c.entries_[full] = detail::parse_value(s.substr(eq + 1), line_no);
        }
        return c;
    }

    static Config parse_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) raise(Errc::ConfigError, "cannot open config file: " + path);
        std::stringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

    /// Applies a `key=value` override; the key must already be meaningful to
    /// the schema check that follows.
    void set_override(std::string_view assignment) {
        const std::size_t eq = assignment.find('=');
        if (eq == std::string_view::npos)
            raise(Errc::ConfigError, "override must be key=value: " + std::string(assignment));
        const std::string key(detail::trim(assignment.substr(0, eq)));
        entries_[key] = detail::parse_value(assignment.substr(eq + 1), 0);
    }

    [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) != 0; }

    [[nodiscard]] double number(const std::string& key, double fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        if (it->second.kind != ConfigValue::Kind::Number)
            raise(Errc::ConfigError, "key '" + key + "' must be a number");
        return it->second.num;
    }

    [[nodiscard]] bool flag(const std::string& key, bool fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        if (it->second.kind != ConfigValue::Kind::Bool)
            raise(Errc::ConfigError, "key '" + key + "' must be true/false");
        return it->second.boolean;
    }

    [[nodiscard]] std::string text(const std::string& key, const std::string& fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        if (it->second.kind != ConfigValue::Kind::String)
            raise(Errc::ConfigError, "key '" + key + "' must be a string");
        return it->second.str;
    }

    [[nodiscard]] std::vector<double> list(const std::string& key,
                                           const std::vector<double>& fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        if (it->second.kind != ConfigValue::Kind::List)
            raise(Errc::ConfigError, "key '" + key + "' must be a list");
        return it->second.list;
    }

    [[nodiscard]] const std::map<std::string, ConfigValue>& entries() const {
        return entries_;
    }

    void set_number(const std::string& key, double v) {
        ConfigValue cv;
        cv.kind = ConfigValue::Kind::Number;
        cv.num = v;
        entries_[key] = cv;
    }

    void set_text(const std::string& key, std::string v) {
        ConfigValue cv;
        cv.kind = ConfigValue::Kind::String;
        cv.str = std::move(v);
        entries_[key] = cv;
    }

    void set_flag(const std::string& key, bool v) {
        ConfigValue cv;
        cv.kind = ConfigValue::Kind::Bool;
        cv.boolean = v;
        entries_[key] = cv;
    }

    void set_list(const std::string& key, std::vector<double> v) {
        ConfigValue cv;
        cv.kind = ConfigValue::Kind::List;
        cv.list = std::move(v);
        entries_[key] = cv;
    }

    /// Rejects any key outside the allowed set, naming it and its line.
    void enforce_schema(const std::set<std::string>& allowed) const {
        for (const auto& [key, value] : entries_) {
            if (!allowed.count(key)) {
                std::string msg = "unknown key '" + key + "'";
                if (value.line > 0) msg += " (line " + std::to_string(value.line) + ")";
                raise(Errc::ConfigError, msg);
            }
        }
    }

private:
    std::map<std::string, ConfigValue> entries_;
};

}  // namespace camsim
