#include "ms/config.hpp"

#include "ms/errors.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <fstream>

namespace ms {

namespace {

constexpr std::array kKnownKeys = {
    "schedule.T",       "schedule.noise_base", "sampler.T_star",
    "sampler.tau",      "sampler.use_ratio_stop", "sampler.ratio_window",
    "sampler.record_trace", "vq.K",            "vq.window",
    "vq.iters",         "seed",
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

} // namespace

void Config::check_known(const std::string& key) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
        throw UsageError("unknown config key: '" + key + "'");
}

Config Config::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open config: " + path);
    Config cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": expected 'key = value'");
        cfg.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return cfg;
}

void Config::set_pair(const std::string& pair) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos)
        throw UsageError("expected key=value, got '" + pair + "'");
    set(trim(pair.substr(0, eq)), trim(pair.substr(eq + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
    check_known(key);
    values_[key] = value;
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

int Config::get_int(const std::string& key, int fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    const long v = std::strtol(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0')
        throw UsageError("config key '" + key + "': expected integer, got '" + it->second + "'");
    return static_cast<int>(v);
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0')
        throw UsageError("config key '" + key + "': expected number, got '" + it->second + "'");
    return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw UsageError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::optional<double> Config::get_optional_double(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return get_double(key, 0.0);
}

} // namespace ms
