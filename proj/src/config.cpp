#include "coopsgd/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace coopsgd {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

bool valid_key(const std::string& key) {
    if (key.empty() || key.front() == '.' || key.back() == '.') return false;
    for (char c : key)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '_' && c != '-')
            return false;
    return true;
}

// Splits a bracketed list body on commas; no nesting in this grammar.
std::vector<std::string> split_list(const std::string& body, const std::string& key, int line) {
    std::vector<std::string> parts;
    std::string current;
    bool in_string = false;
    for (char c : body) {
        if (c == '"') in_string = !in_string;
        if (c == ',' && !in_string) {
            parts.push_back(trim(current));
            current.clear();
        } else {
            current += c;
        }
    }
    const std::string last = trim(current);
    if (!last.empty()) parts.push_back(last);
    for (const std::string& p : parts)
        if (p.empty())
            throw ConfigError(key, "empty list element at line " + std::to_string(line));
    return parts;
}

double parse_number(const std::string& token, const std::string& key, int line) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || !std::isfinite(v))
        throw ConfigError(key, "not a number: '" + token + "' at line " + std::to_string(line));
    return v;
}

ConfigValue parse_value(const std::string& token, const std::string& key, int line) {
    if (token.size() >= 2 && token.front() == '"' && token.back() == '"')
        return token.substr(1, token.size() - 2);
    if (token == "true") return true;
    if (token == "false") return false;
    if (!token.empty() && token.front() == '[') {
        if (token.back() != ']') throw ConfigError(key, "unterminated list at line " + std::to_string(line));
        const std::vector<std::string> parts = split_list(token.substr(1, token.size() - 2), key, line);
        if (parts.empty()) throw ConfigError(key, "empty list at line " + std::to_string(line));
        if (parts.front().front() == '"') {
            std::vector<std::string> out;
            for (const std::string& p : parts) {
                if (p.size() < 2 || p.front() != '"' || p.back() != '"')
                    throw ConfigError(key, "mixed list element types at line " + std::to_string(line));
                out.push_back(p.substr(1, p.size() - 2));
            }
            return out;
        }
        std::vector<double> out;
        for (const std::string& p : parts) out.push_back(parse_number(p, key, line));
        return out;
    }
    return parse_number(token, key, line);
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

}  // namespace

ConfigMap ConfigMap::parse(const std::string& text) {
    ConfigMap out;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config", "expected key = value at line " + std::to_string(line_no));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!valid_key(key))
            throw ConfigError("config", "invalid key '" + key + "' at line " + std::to_string(line_no));
        if (value.empty()) throw ConfigError(key, "missing value at line " + std::to_string(line_no));
        if (out.values_.count(key))
            throw ConfigError(key, "duplicate key at line " + std::to_string(line_no));
        out.values_.emplace(key, parse_value(value, key, line_no));
    }
    return out;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const ConfigValue* ConfigMap::find(const std::string& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

double ConfigMap::require_number(const std::string& key) const {
    const ConfigValue* v = find(key);
    if (!v) throw ConfigError(key, "missing required key");
    if (const double* d = std::get_if<double>(v)) return *d;
    throw ConfigError(key, "expected a number");
}

double ConfigMap::number_or(const std::string& key, double fallback) const {
    return find(key) ? require_number(key) : fallback;
}

std::int64_t ConfigMap::require_integer(const std::string& key) const {
    const double d = require_number(key);
    const auto i = static_cast<std::int64_t>(std::llround(d));
    if (static_cast<double>(i) != d) throw ConfigError(key, "expected an integer");
    return i;
}

std::int64_t ConfigMap::integer_or(const std::string& key, std::int64_t fallback) const {
    return find(key) ? require_integer(key) : fallback;
}

std::string ConfigMap::require_string(const std::string& key) const {
    const ConfigValue* v = find(key);
    if (!v) throw ConfigError(key, "missing required key");
    if (const std::string* s = std::get_if<std::string>(v)) return *s;
    throw ConfigError(key, "expected a string");
}

std::string ConfigMap::string_or(const std::string& key, const std::string& fallback) const {
    return find(key) ? require_string(key) : fallback;
}

bool ConfigMap::bool_or(const std::string& key, bool fallback) const {
    const ConfigValue* v = find(key);
    if (!v) return fallback;
    if (const bool* b = std::get_if<bool>(v)) return *b;
    throw ConfigError(key, "expected true or false");
}

std::vector<double> ConfigMap::require_number_list(const std::string& key) const {
    const ConfigValue* v = find(key);
    if (!v) throw ConfigError(key, "missing required key");
    if (const auto* l = std::get_if<std::vector<double>>(v)) return *l;
    if (const double* d = std::get_if<double>(v)) return {*d};  // singleton promotion
    throw ConfigError(key, "expected a list of numbers");
}

std::optional<std::vector<double>> ConfigMap::number_list(const std::string& key) const {
    if (!find(key)) return std::nullopt;
    return require_number_list(key);
}

std::vector<std::string> ConfigMap::string_list_or_empty(const std::string& key) const {
    const ConfigValue* v = find(key);
    if (!v) return {};
    if (const auto* l = std::get_if<std::vector<std::string>>(v)) return *l;
    if (const std::string* s = std::get_if<std::string>(v)) return {*s};
    throw ConfigError(key, "expected a list of strings");
}

std::vector<std::string> ConfigMap::unknown_keys(const std::vector<std::string>& known_prefixes) const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_) {
        bool known = false;
        for (const std::string& p : known_prefixes) {
            if (key == p || (key.size() > p.size() && key.compare(0, p.size(), p) == 0 &&
                             key[p.size()] == '.')) {
                known = true;
                break;
            }
        }
        if (!known) out.push_back(key);
    }
    return out;
}

}  // namespace coopsgd
