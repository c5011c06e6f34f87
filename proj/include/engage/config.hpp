#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace engage {

// Flat key-value config with [section] headers. Keys are addressed as
// "section.key"; '#' and ';' start comments. Nothing is read from the
// environment.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text,
                              const std::string& origin = "<config>");

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::int64_t get_i64(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    // comma-separated numeric lists
    std::vector<int> get_int_list(const std::string& key,
                                  const std::vector<int>& fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

}  // namespace engage
