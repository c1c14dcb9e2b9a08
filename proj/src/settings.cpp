#include "geoctx/settings.hpp"

#include <charconv>
#include <sstream>

#include "geoctx/error.hpp"
#include "geoctx/io.hpp"

namespace geoctx {

namespace {

std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Settings Settings::from_file(const std::string &path) { return parse(read_text_file(path), path); }

Settings Settings::parse(const std::string &text, const std::string &origin) {
    Settings s;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.find('=') == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        }
        s.assign(line);
    }
    return s;
}

void Settings::set(const std::string &key, const std::string &value) {
    const std::string k = trim(key);
    if (k.empty()) throw ConfigError("empty configuration key");
    values_[k] = trim(value);
}

void Settings::assign(const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void Settings::merge(const Settings &other) {
    for (const auto &[k, v] : other.values_) values_[k] = v;
}

std::string Settings::str(const std::string &key, const std::string &fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string Settings::required(const std::string &key) const {
    const auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) throw ConfigError("missing required setting '" + key + "'");
    return it->second;
}

long long Settings::integer(const std::string &key, long long fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    long long v = 0;
    const std::string &s = it->second;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw ConfigError("setting '" + key + "' is not an integer: '" + s + "'");
    }
    return v;
}

std::size_t Settings::count(const std::string &key, std::size_t fallback) const {
    const long long v = integer(key, static_cast<long long>(fallback));
    if (v < 0) throw ConfigError("setting '" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

double Settings::real(const std::string &key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used == it->second.size()) return v;
    } catch (const std::exception &) {
    }
    throw ConfigError("setting '" + key + "' is not a number: '" + it->second + "'");
}

bool Settings::flag(const std::string &key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string &v = it->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("setting '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<std::string> Settings::list(const std::string &key, const std::vector<std::string> &fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::string> out;
    std::istringstream in(it->second);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> Settings::reals(const std::string &key, const std::vector<double> &fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const std::string &item : list(key, {})) {
        Settings one;
        one.set(key, item);
        out.push_back(one.real(key, 0.0));
    }
    return out;
}

BoundingBox Settings::bbox(const std::string &key, const BoundingBox &fallback) const {
    if (!has(key)) return fallback;
    const auto v = reals(key, {});
    if (v.size() != 4) throw ConfigError("setting '" + key + "' needs lon_min,lat_min,lon_max,lat_max");
    BoundingBox b{v[0], v[2], v[1], v[3]};
    if (!(b.lon_min < b.lon_max) || !(b.lat_min < b.lat_max)) {
        throw ConfigError("setting '" + key + "' describes an empty box");
    }
    return b;
}

GridSpec Settings::grid(const std::string &prefix, const GridSpec &fallback) const {
    const std::size_t rows = count(prefix + ".rows", fallback.rows);
    const std::size_t cols = count(prefix + ".cols", fallback.cols);
    try {
        return GridSpec(rows, cols, bbox(prefix + ".bbox", fallback.bbox));
    } catch (const ConfigError &) {
        throw;
    } catch (const Error &e) {
        throw ConfigError("grid '" + prefix + "': " + e.what());
    }
}

RadiiSet Settings::radii(const std::string &key) const {
    if (!has(key)) return RadiiSet::standard();
    try {
        return RadiiSet(reals(key, {}));
    } catch (const ConfigError &) {
        throw;
    } catch (const Error &e) {
        throw ConfigError("setting '" + key + "': " + e.what());
    }
}

std::uint64_t Settings::seed() const {
    const std::string s = required("seed");
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("seed must be a non-negative integer");
    return v;
}

nlohmann::json Settings::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto &[k, v] : values_) j[k] = v;
    return j;
}

}  // namespace geoctx
