#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace bwler::cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sectioned key/value config. Values stay strings until a typed getter
/// converts them; conversion failures raise ConfigError naming section.key.
class Config {
public:
    static Config parse_string(const std::string& text);
    /// INI text, or the config echo of a report.json.
    static Config parse_file(const std::filesystem::path& path);
    static Config from_json(const nlohmann::ordered_json& j);
    nlohmann::ordered_json to_json() const;

    bool has(const std::string& section) const { return data_.count(section) > 0; }
    std::vector<std::string> sections() const;
    std::vector<std::string> sections_with_prefix(const std::string& prefix) const;
    /// Keys and raw values of one section (empty when absent).
    std::map<std::string, std::string> section(const std::string& name) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    std::optional<double> get_double(const std::string& section, const std::string& key) const;
    std::size_t get_size(const std::string& section, const std::string& key, std::size_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& section, const std::string& key) const;
    std::vector<std::size_t> get_size_list(const std::string& section, const std::string& key) const;

    /// Rejects keys of `section` outside `allowed`.
    void check_keys(const std::string& section, const std::set<std::string>& allowed) const;
    /// Rejects sections not accepted by `allowed` (exact names or prefixes ending in '.').
    void check_sections(const std::set<std::string>& allowed) const;

private:
    std::map<std::string, std::map<std::string, std::string>> data_;
};

double parse_double(const std::string& text, const std::string& what);
std::size_t parse_size(const std::string& text, const std::string& what);
std::vector<std::string> split_list(const std::string& text);

}  // namespace bwler::cli
