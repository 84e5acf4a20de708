#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "coopsgd/errors.hpp"

namespace coopsgd {

// One value of the experiment-config grammar: flat tables with dotted keys,
//   key.path = "string" | number | true/false | [v, v, ...]
// and '#' comments. Lists are homogeneous (all numbers or all strings).
using ConfigValue =
    std::variant<bool, double, std::string, std::vector<double>, std::vector<std::string>>;

class ConfigMap {
public:
    static ConfigMap parse(const std::string& text);
    static ConfigMap parse_file(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    double require_number(const std::string& key) const;
    double number_or(const std::string& key, double fallback) const;
    std::int64_t require_integer(const std::string& key) const;
    std::int64_t integer_or(const std::string& key, std::int64_t fallback) const;
    std::string require_string(const std::string& key) const;
    std::string string_or(const std::string& key, const std::string& fallback) const;
    bool bool_or(const std::string& key, bool fallback) const;
    std::vector<double> require_number_list(const std::string& key) const;
    std::optional<std::vector<double>> number_list(const std::string& key) const;
    std::vector<std::string> string_list_or_empty(const std::string& key) const;

    // Keys present in the file but never read; used to reject typos.
    std::vector<std::string> unknown_keys(const std::vector<std::string>& known_prefixes) const;

    const std::map<std::string, ConfigValue>& values() const { return values_; }

private:
    const ConfigValue* find(const std::string& key) const;

    std::map<std::string, ConfigValue> values_;
};

}  // namespace coopsgd
