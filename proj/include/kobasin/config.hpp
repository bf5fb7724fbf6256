#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "kobasin/skew_product.hpp"

namespace kobasin {

struct ConfigKey {
    std::string key;  // dotted path
    nlohmann::json fallback;
    std::string doc;
};

/// Every recognized key with its default, in help order.
const std::vector<ConfigKey>& config_keys();

/// Run configuration: a JSON tree holding every key of config_keys(). Files
/// may omit keys (defaults apply) but may not add unknown ones.
class RunConfig {
public:
    RunConfig();  // all defaults

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);

    /// `key=value`; the value is parsed as JSON, falling back to a plain string.
    void set(const std::string& assignment);
    void set(const std::string& key, const nlohmann::json& value);
    void validate() const;

    const nlohmann::json& as_json() const { return data_; }
    /// Canonical serialization (sorted keys, no whitespace).
    std::string canonical() const { return data_.dump(); }
    std::string hash() const;

    const nlohmann::json& at(const std::string& key) const;
    double number(const std::string& key) const { return at(key).get<double>(); }
    int integer(const std::string& key) const { return at(key).get<int>(); }
    std::string text(const std::string& key) const { return at(key).get<std::string>(); }

    SkewProduct map() const;
    /// eps_attract, resolving 0 to the automatic choice for the configured map.
    double eps_attract() const;

private:
    nlohmann::json data_;
};

/// Help text listing every key and its default.
std::string config_help();

}  // namespace kobasin
