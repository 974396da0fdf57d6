#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace bwler::cli {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string name(const std::string& section, const std::string& key) { return section + "." + key; }

}  // namespace

double parse_double(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (t.empty() || ec != std::errc() || ptr != end) throw ConfigError(what + ": expected a number, got '" + text + "'");
    return v;
}

std::size_t parse_size(const std::string& text, const std::string& what) {
    const std::string t = trim(text);
    std::size_t v = 0;
    const auto* end = t.data() + t.size();
    const auto [ptr, ec] = std::from_chars(t.data(), end, v);
    if (t.empty() || ec != std::errc() || ptr != end)
        throw ConfigError(what + ": expected a non-negative integer, got '" + text + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

Config Config::parse_string(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    Config c;
    for (const auto& [section, body] : tree) {
        if (!body.data().empty()) throw ConfigError("config: key '" + section + "' outside any section");
        auto& sec = c.data_[section];
        for (const auto& [key, value] : body) sec[key] = trim(value.data());
    }
    return c;
}

Config Config::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::ordered_json j;
        try {
            j = nlohmann::ordered_json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        if (!j.contains("config") || !j["config"].contains("ini"))
            throw ConfigError("config: JSON file carries no config echo");
        return from_json(j["config"]["ini"]);
    }
    return parse_string(text);
}

Config Config::from_json(const nlohmann::ordered_json& j) {
    Config c;
    if (!j.is_object()) throw ConfigError("config: echo must be an object");
    for (const auto& [section, body] : j.items()) {
        if (!body.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
        for (const auto& [key, value] : body.items()) {
            if (!value.is_string()) throw ConfigError("config: " + name(section, key) + " must be a string");
            c.data_[section][key] = value.get<std::string>();
        }
    }
    return c;
}

nlohmann::ordered_json Config::to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [section, body] : data_) {
        nlohmann::ordered_json s = nlohmann::ordered_json::object();
        for (const auto& [k, v] : body) s[k] = v;
        j[section] = s;
    }
    return j;
}

std::vector<std::string> Config::sections() const {
    std::vector<std::string> out;
    for (const auto& [s, body] : data_) out.push_back(s);
    return out;
}

std::vector<std::string> Config::sections_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [s, body] : data_)
        if (s.rfind(prefix, 0) == 0) out.push_back(s);
    return out;
}

std::map<std::string, std::string> Config::section(const std::string& name) const {
    const auto s = data_.find(name);
    return s == data_.end() ? std::map<std::string, std::string>{} : s->second;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    data_[section][key] = value;
}

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
    const auto s = data_.find(section);
    if (s == data_.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
}

std::string Config::get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
    return get(section, key).value_or(fallback);
}

double Config::get_double(const std::string& section, const std::string& key, double fallback) const {
    const auto v = get(section, key);
    return v ? parse_double(*v, name(section, key)) : fallback;
}

std::optional<double> Config::get_double(const std::string& section, const std::string& key) const {
    const auto v = get(section, key);
    if (!v) return std::nullopt;
    return parse_double(*v, name(section, key));
}

std::size_t Config::get_size(const std::string& section, const std::string& key, std::size_t fallback) const {
    const auto v = get(section, key);
    return v ? parse_size(*v, name(section, key)) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const auto v = get(section, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(name(section, key) + ": expected true/false, got '" + *v + "'");
}

std::vector<std::string> Config::get_list(const std::string& section, const std::string& key) const {
    const auto v = get(section, key);
    return v ? split_list(*v) : std::vector<std::string>{};
}

std::vector<std::size_t> Config::get_size_list(const std::string& section, const std::string& key) const {
    std::vector<std::size_t> out;
    for (const auto& item : get_list(section, key)) out.push_back(parse_size(item, name(section, key)));
    return out;
}

void Config::check_keys(const std::string& section, const std::set<std::string>& allowed) const {
    const auto s = data_.find(section);
    if (s == data_.end()) return;
    for (const auto& [k, v] : s->second)
        if (!allowed.count(k)) throw ConfigError("config: unknown key '" + name(section, k) + "'");
}

void Config::check_sections(const std::set<std::string>& allowed) const {
    for (const auto& [s, body] : data_) {
        bool ok = allowed.count(s) > 0;
        for (const auto& a : allowed)
            if (!a.empty() && a.back() == '.' && s.rfind(a, 0) == 0 && s.size() > a.size()) ok = true;
        if (!ok) throw ConfigError("config: unknown section [" + s + "]");
    }
}

}  // namespace bwler::cli
