#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace sgrl::config {

// Flat `key = value` text, '#' comments, UTF-8. Values stay strings until a
// typed getter asks; unknown keys are rejected against a declared key set.
class Config {
public:
    static Config parse_file(const std::filesystem::path& file);
    static Config parse_string(const std::string& text);

    std::string serialize() const;  // keys in first-seen order

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;  // comma-separated

    void set(const std::string& key, const std::string& value);

    // Throws std::invalid_argument naming every key outside `allowed`.
    void require_known_keys(const std::set<std::string>& allowed) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    const std::string* find(const std::string& key) const;
    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace sgrl::config
