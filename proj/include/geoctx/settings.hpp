#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoctx/geodata.hpp"
#include "geoctx/histfn.hpp"

namespace geoctx {

/// Flat key=value configuration. Files hold one assignment per line, `#`
/// starts a comment; later assignments override earlier ones, so a config
/// file loaded first can be overridden by `--set key=value` and by flags.
class Settings {
public:
    static Settings from_file(const std::string &path);
    static Settings parse(const std::string &text, const std::string &origin = "<string>");

    void set(const std::string &key, const std::string &value);
    /// "key=value"
    void assign(const std::string &assignment);
    void merge(const Settings &other);

    bool has(const std::string &key) const { return values_.count(key) > 0; }
    const std::map<std::string, std::string> &values() const { return values_; }

    std::string str(const std::string &key, const std::string &fallback) const;
    std::string required(const std::string &key) const;
    long long integer(const std::string &key, long long fallback) const;
    std::size_t count(const std::string &key, std::size_t fallback) const;
    double real(const std::string &key, double fallback) const;
    bool flag(const std::string &key, bool fallback) const;
    /// Comma-separated list; whitespace around items is ignored.
    std::vector<std::string> list(const std::string &key, const std::vector<std::string> &fallback) const;
    std::vector<double> reals(const std::string &key, const std::vector<double> &fallback) const;

    /// `<prefix>.rows`, `<prefix>.cols`, `<prefix>.bbox` = lon_min,lat_min,lon_max,lat_max
    GridSpec grid(const std::string &prefix, const GridSpec &fallback) const;
    BoundingBox bbox(const std::string &key, const BoundingBox &fallback) const;
    RadiiSet radii(const std::string &key) const;
    std::uint64_t seed() const;

    nlohmann::json to_json() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace geoctx
