#include "engage/config.hpp"

#include <fstream>
#include <sstream>

#include "engage/errors.hpp"

namespace engage {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path);
}

Config Config::from_string(const std::string& text, const std::string& origin) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';')
            continue;
        // an inline comment needs whitespace before the marker
        for (std::size_t i = 1; i < t.size(); ++i) {
            if ((t[i] == '#' || t[i] == ';') && (t[i - 1] == ' ' || t[i - 1] == '\t')) {
                t = trim(t.substr(0, i));
                break;
            }
        }
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected key = value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.set(section.empty() ? key : section + "." + key, value);
    }
    return cfg;
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

void Config::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    try {
        std::size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size())
            throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": bad number '" + it->second + "'");
    }
}

std::int64_t Config::get_i64(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    try {
        std::size_t pos = 0;
        std::int64_t v = std::stoll(it->second, &pos);
        if (pos != it->second.size())
            throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": bad integer '" + it->second + "'");
    }
}

int Config::get_int(const std::string& key, int fallback) const {
    std::int64_t v = get_i64(key, fallback);
    if (v < INT32_MIN || v > INT32_MAX)
        throw ConfigError("config key " + key + ": value out of range");
    return static_cast<int>(v);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    try {
        std::size_t pos = 0;
        std::uint64_t v = std::stoull(it->second, &pos);
        if (pos != it->second.size())
            throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": bad integer '" + it->second + "'");
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "on" || v == "yes" || v == "1")
        return true;
    if (v == "false" || v == "off" || v == "no" || v == "0")
        return false;
    throw ConfigError("config key " + key + ": bad boolean '" + v + "'");
}

namespace {

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = s.find(',', start);
        if (comma == std::string::npos) {
            parts.push_back(trim(s.substr(start)));
            break;
        }
        parts.push_back(trim(s.substr(start, comma - start)));
        start = comma + 1;
    }
    return parts;
}

}  // namespace

std::vector<int> Config::get_int_list(const std::string& key,
                                      const std::vector<int>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    std::vector<int> out;
    for (const auto& part : split_commas(it->second)) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stoi(part, &pos));
            if (pos != part.size())
                throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": bad integer '" + part + "'");
        }
    }
    return out;
}

std::vector<double> Config::get_double_list(const std::string& key,
                                            const std::vector<double>& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    std::vector<double> out;
    for (const auto& part : split_commas(it->second)) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(part, &pos));
            if (pos != part.size())
                throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw ConfigError("config key " + key + ": bad number '" + part + "'");
        }
    }
    return out;
}

}  // namespace engage
