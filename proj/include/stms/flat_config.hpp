#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "stms/errors.hpp"

namespace stms {

// Flat key=value config text: one assignment per line, '#' starts a comment,
// dotted keys for nesting (model.c=64). Blank lines ignored.
class FlatConfig {
  public:
    FlatConfig() = default;

    static FlatConfig parse(std::istream& in, const std::string& source = "<config>") {
        FlatConfig cfg;
        cfg.source_ = source;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ParseError(source + ":" + std::to_string(line_no) +
                                 ": expected key=value, got '" + trimmed + "'");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw ParseError(source + ":" + std::to_string(line_no) + ": empty key");
            if (cfg.values_.count(key))
                throw ParseError(source + ":" + std::to_string(line_no) +
                                 ": duplicate key '" + key + "'");
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static FlatConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config file: " + path);
        return parse(in, path);
    }

    static FlatConfig parse_string(const std::string& text, const std::string& source = "<config>") {
        std::istringstream in(text);
        return parse(in, source);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end())
            throw ConfigError(source_ + ": missing required key '" + key + "'");
        used_.insert(key);
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        return has(key) ? get_string(key) : fallback;
    }

    double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    std::int64_t get_int(const std::string& key) const { return to_int(key, get_string(key)); }
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const std::string s = get_string(key);
        try {
            std::size_t pos = 0;
            const std::uint64_t v = std::stoull(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(source_ + ": key '" + key + "' is not an unsigned integer: '" + s + "'");
        }
    }

    bool get_bool(const std::string& key) const {
        const std::string s = lower(get_string(key));
        if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "off" || s == "no") return false;
        throw ConfigError(source_ + ": key '" + key + "' is not a boolean: '" + s + "'");
    }
    bool get_bool(const std::string& key, bool fallback) const {
        return has(key) ? get_bool(key) : fallback;
    }

    // Comma-separated list of numbers.
    std::vector<double> get_double_list(const std::string& key) const {
        const std::string s = get_string(key);
        std::vector<double> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::string t = trim(item);
            if (t.empty()) continue;
            out.push_back(to_double(key, t));
        }
        if (out.empty())
            throw ConfigError(source_ + ": key '" + key + "' holds no values");
        return out;
    }

    // Keys present in the file but never read by any getter; parsers use this
    // to reject typos.
    std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

    void reject_unused() const {
        const auto leftover = unused_keys();
        if (!leftover.empty())
            throw ConfigError(source_ + ": unknown config key '" + leftover.front() + "'");
    }

    const std::string& source() const { return source_; }

  private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static std::string lower(std::string s) {
        std::transform(s.begin(), s.end(), s.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return s;
    }

    double to_double(const std::string& key, const std::string& s) const {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(source_ + ": key '" + key + "' is not a number: '" + s + "'");
        }
    }

    std::int64_t to_int(const std::string& key, const std::string& s) const {
        try {
            std::size_t pos = 0;
            const std::int64_t v = std::stoll(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw ConfigError(source_ + ": key '" + key + "' is not an integer: '" + s + "'");
        }
    }

    std::string source_ = "<config>";
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

}  // namespace stms
