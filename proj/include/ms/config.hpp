#pragma once

#include <map>
#include <optional>
#include <string>

namespace ms {

/// Flat `key = value` configuration with namespaced keys. Lines starting
/// with '#' (or blank) are ignored. Unknown keys raise UsageError naming
/// the key; CLI flags override file values via set().
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);

    /// Parse one "key=value" pair (CLI override syntax).
    void set_pair(const std::string& pair);
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;

    int get_int(const std::string& key, int fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::optional<double> get_optional_double(const std::string& key) const;

    /// All entries in key order, for manifest echoes.
    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    static void check_known(const std::string& key);

    std::map<std::string, std::string> values_;
};

} // namespace ms
