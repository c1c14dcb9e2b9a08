#include "geoctx/io.hpp"

#include <algorithm>
#include <fstream>
#include <span>
#include <sstream>

#include "geoctx/binary_io.hpp"
#include "geoctx/error.hpp"

namespace geoctx {

using nlohmann::json;

namespace {

template <typename Fn>
void for_each_json_line(const std::string &path, Fn &&fn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            fn(json::parse(line));
        } catch (const json::exception &e) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const Error &e) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

class LineWriter {
public:
    explicit LineWriter(const std::string &path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open '" + path + "' for writing");
    }
    void line(const json &j) { out_ << j.dump() << '\n'; }
    void close() {
        out_.flush();
        if (!out_) throw IoError("write to '" + path_ + "' failed");
    }

private:
    std::string path_;
    std::ofstream out_;
};

GeoPoint point_of(const json &j) {
    GeoPoint p{j.at("lon").get<double>(), j.at("lat").get<double>()};
    validate(p);
    return p;
}

}  // namespace

std::vector<GeoRecord> read_records(const std::string &path) {
    std::vector<GeoRecord> out;
    for_each_json_line(path, [&](const json &j) {
        GeoRecord r;
        r.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
        r.point = point_of(j);
        if (j.contains("label") && !j.at("label").is_null()) r.label = j.at("label").get<int>();
        r.embedding = j.at("embedding").get<std::vector<double>>();
        if (j.contains("tags")) r.tags = j.at("tags").get<std::vector<std::uint32_t>>();
        if (j.contains("split")) r.split = j.at("split").get<std::string>();
        out.push_back(std::move(r));
    });
    if (!out.empty()) {
        const std::size_t dim = out.front().embedding.size();
        for (const auto &r : out) {
            if (r.embedding.size() != dim) {
                throw FormatError(path + ": record " + r.id + " has embedding length " +
                                  std::to_string(r.embedding.size()) + ", expected " + std::to_string(dim));
            }
        }
    }
    return out;
}

void write_records(const std::string &path, const std::vector<GeoRecord> &records) {
    LineWriter w(path);
    for (const auto &r : records) {
        json j = {{"id", r.id}, {"lon", r.point.lon}, {"lat", r.point.lat}};
        if (r.label) j["label"] = *r.label;
        j["embedding"] = r.embedding;
        j["tags"] = r.tags;
        j["split"] = r.split;
        w.line(j);
    }
    w.close();
}

std::vector<KeyedPoint> read_corpus(const std::string &path) {
    std::vector<KeyedPoint> out;
    for_each_json_line(path, [&](const json &j) {
        KeyedPoint kp;
        kp.point = point_of(j);
        const auto key = j.at("key").get<long long>();
        if (key < 0) throw InvalidArgument("negative key");
        kp.key = static_cast<std::uint32_t>(key);
        kp.weight = j.contains("weight") ? j.at("weight").get<double>() : 1.0;
        out.push_back(kp);
    });
    return out;
}

void write_corpus(const std::string &path, const std::vector<KeyedPoint> &events) {
    LineWriter w(path);
    for (const auto &e : events) {
        json j = {{"lon", e.point.lon}, {"lat", e.point.lat}, {"key", e.key}};
        if (e.weight != 1.0) j["weight"] = e.weight;
        w.line(j);
    }
    w.close();
}

ConceptCorpus read_concepts(const std::string &path) {
    ConceptCorpus c;
    bool first = true;
    for_each_json_line(path, [&](const json &j) {
        const GeoPoint p = point_of(j);
        const auto probs = j.at("probs").get<std::vector<double>>();
        if (first) {
            c.concept_count = probs.size();
            first = false;
        } else if (probs.size() != c.concept_count) {
            throw InvalidArgument("concept vector length " + std::to_string(probs.size()) +
                                  " differs from " + std::to_string(c.concept_count));
        }
        for (std::size_t k = 0; k < probs.size(); ++k) {
            if (!(probs[k] >= 0.0 && probs[k] <= 1.0)) throw InvalidArgument("concept probability outside [0, 1]");
            if (probs[k] > 0.0) c.events.push_back({p, static_cast<std::uint32_t>(k), probs[k]});
        }
    });
    return c;
}

void write_concepts(const std::string &path,
                    const std::vector<std::pair<GeoPoint, std::vector<double>>> &images) {
    LineWriter w(path);
    for (const auto &[p, probs] : images) w.line({{"lon", p.lon}, {"lat", p.lat}, {"probs", probs}});
    w.close();
}

RasterMap load_raster(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open raster '" + path + "'");
    std::string magic, version;
    std::size_t rows = 0, cols = 0;
    BoundingBox bb;
    in >> magic >> version >> rows >> cols >> bb.lon_min >> bb.lat_min >> bb.lon_max >> bb.lat_max;
    if (!in || magic != "GEORASTER" || version != "v1") {
        throw FormatError("'" + path + "' is not a GEORASTER v1 file");
    }
    if (in.get() != '\n') throw FormatError("'" + path + "': malformed raster header");
    std::vector<std::uint8_t> px(rows * cols * 3);
    in.read(reinterpret_cast<char *>(px.data()), static_cast<std::streamsize>(px.size()));
    if (static_cast<std::size_t>(in.gcount()) != px.size()) {
        throw FormatError("'" + path + "': raster is truncated");
    }
    std::string name = path;
    if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
    return RasterMap(name, rows, cols, bb, std::move(px));
}

void save_raster(const std::string &path, const RasterMap &map) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    std::ostringstream header;
    header.precision(17);
    header << "GEORASTER v1\n"
           << map.rows << ' ' << map.cols << '\n'
           << map.bbox.lon_min << ' ' << map.bbox.lat_min << ' ' << map.bbox.lon_max << ' '
           << map.bbox.lat_max << '\n';
    out << header.str();
    out.write(reinterpret_cast<const char *>(map.pixels.data()), static_cast<std::streamsize>(map.pixels.size()));
    if (!out) throw IoError("write to '" + path + "' failed");
}

ZipTable load_zip_table(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open zip table '" + path + "'");
    std::vector<ZipEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("zip", 0) == 0) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() < 3) throw FormatError(path + ":" + std::to_string(lineno) + ": too few columns");
        try {
            ZipEntry e;
            e.zip = fields[0];
            e.centroid = GeoPoint{std::stod(fields[1]), std::stod(fields[2])};
            for (std::size_t i = 3; i < fields.size(); ++i) e.stats.push_back(std::stod(fields[i]));
            entries.push_back(std::move(e));
        } catch (const std::logic_error &) {
            throw FormatError(path + ":" + std::to_string(lineno) + ": malformed number");
        }
    }
    return ZipTable(std::move(entries));
}

void save_zip_table(const std::string &path, const ZipTable &table) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.precision(17);
    out << "zip,lon,lat";
    for (std::size_t i = 0; i < table.dimension(); ++i) out << ",v" << (i + 1);
    out << '\n';
    for (const auto &e : table.entries()) {
        out << e.zip << ',' << e.centroid.lon << ',' << e.centroid.lat;
        for (double v : e.stats) out << ',' << v;
        out << '\n';
    }
    if (!out) throw IoError("write to '" + path + "' failed");
}

const HistFnBank *CachedRecord::bank(FeatureKind kind) const {
    for (const auto &[k, b] : banks) {
        if (k == kind) return &b;
    }
    return nullptr;
}

namespace {

constexpr char kCacheMagic[9] = "GEOCTXFC";
constexpr std::uint32_t kCacheVersion = 1;

std::vector<FeatureKind> ordered_features(const std::map<std::string, std::size_t> &dims) {
    std::vector<FeatureKind> out;
    for (FeatureKind k : kAllFeatureKinds) {
        if (dims.count(feature_name(k))) out.push_back(k);
    }
    return out;
}

// Feature vectors are stored densely (u64 marker all-ones, then values) or,
// when fewer than a third of the entries are nonzero, as u64 nnz followed by
// (u32 index, f64 value) pairs. One-hot GPS vectors shrink ~1000x this way.
constexpr std::uint64_t kDenseMarker = ~std::uint64_t{0};

void write_vector(BinaryWriter &w, std::span<const double> v) {
    std::size_t nnz = 0;
    for (double x : v) nnz += x != 0.0;
    if (3 * nnz >= v.size()) {
        w.u64(kDenseMarker);
        w.f64s(v);
        return;
    }
    w.u64(nnz);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == 0.0) continue;
        w.u32(static_cast<std::uint32_t>(i));
        w.f64(v[i]);
    }
}

void read_vector(BinaryReader &r, std::span<double> v) {
    const std::uint64_t head = r.u64();
    if (head == kDenseMarker) {
        r.f64s(v);
        return;
    }
    if (head > v.size()) throw FormatError("corrupt sparse vector in feature cache");
    std::fill(v.begin(), v.end(), 0.0);
    for (std::uint64_t i = 0; i < head; ++i) {
        const std::uint32_t idx = r.u32();
        if (idx >= v.size()) throw FormatError("sparse index out of range in feature cache");
        v[idx] = r.f64();
    }
}

}  // namespace

json FeatureCache::manifest() const {
    json features = json::array();
    for (FeatureKind k : ordered_features(dims)) {
        features.push_back({{"name", feature_name(k)}, {"dim", dims.at(feature_name(k))}});
    }
    json banks = json::array();
    for (FeatureKind k : ordered_features(dims)) {
        if (!is_context_feature(k)) continue;
        const std::size_t keys = key_counts.at(feature_name(k));
        banks.push_back({{"feature", feature_name(k)}, {"keys", keys}, {"fn_count", 2 * keys}});
    }
    std::vector<double> r(radii.values().begin(), radii.values().end());
    return {{"format", "geoctx-feature-cache"},
            {"version", kCacheVersion},
            {"records", records.size()},
            {"classes", classes},
            {"radii", r},
            {"features", features},
            {"banks", banks},
            {"config", config}};
}

void save_feature_cache(const std::string &path, const FeatureCache &cache) {
    const auto kinds = ordered_features(cache.dims);
    BinaryWriter w(path);
    w.bytes(kCacheMagic, 8);
    w.u32(kCacheVersion);
    w.str(cache.manifest().dump());
    for (const CachedRecord &r : cache.records) {
        w.str(r.id);
        w.i32(r.label ? *r.label : -1);
        w.str(r.split);
        w.f64(r.point.lon);
        w.f64(r.point.lat);
        for (FeatureKind k : kinds) {
            const NamedFeature *f = r.bundle.find(k);
            if (!f || f->values.size() != cache.dims.at(feature_name(k))) {
                throw ShapeError("record " + r.id + " does not match the cache manifest");
            }
            write_vector(w, f->values);
        }
        for (FeatureKind k : kinds) {
            if (!is_context_feature(k)) continue;
            const HistFnBank *b = r.bank(k);
            if (!b) throw ShapeError("record " + r.id + " lacks the " + feature_name(k) + " histogram bank");
            w.f64s(b->all_values());
        }
    }
    w.close();
}

FeatureCache load_feature_cache(const std::string &path) {
    BinaryReader rd(path);
    rd.expect_magic(kCacheMagic);
    const std::uint32_t version = rd.u32();
    if (version != kCacheVersion) {
        throw FormatError("feature cache version " + std::to_string(version) + " is not supported");
    }
    const json m = json::parse(rd.str(std::size_t{1} << 26));
    FeatureCache cache;
    cache.classes = m.at("classes").get<std::size_t>();
    cache.radii = RadiiSet(m.at("radii").get<std::vector<double>>());
    cache.config = m.at("config");
    for (const auto &f : m.at("features")) cache.dims[f.at("name").get<std::string>()] = f.at("dim").get<std::size_t>();
    for (const auto &b : m.at("banks")) {
        cache.key_counts[b.at("feature").get<std::string>()] = b.at("keys").get<std::size_t>();
    }
    const auto kinds = ordered_features(cache.dims);
    const std::size_t n = m.at("records").get<std::size_t>();
    cache.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        CachedRecord r;
        r.id = rd.str(1 << 20);
        const std::int32_t label = rd.i32();
        if (label >= 0) r.label = label;
        r.split = rd.str(256);
        r.point.lon = rd.f64();
        r.point.lat = rd.f64();
        for (FeatureKind k : kinds) {
            std::vector<double> v(cache.dims.at(feature_name(k)));
            read_vector(rd, v);
            r.bundle.features.push_back({k, std::move(v)});
        }
        for (FeatureKind k : kinds) {
            if (!is_context_feature(k)) continue;
            const std::size_t fns = 2 * cache.key_counts.at(feature_name(k));
            std::vector<double> v(fns * cache.radii.size());
            rd.f64s(v);
            r.banks.emplace_back(k, HistFnBank(cache.radii, fns, std::move(v)));
        }
        cache.records.push_back(std::move(r));
    }
    if (!rd.at_end()) throw FormatError("'" + path + "' has trailing data");
    return cache;
}

void write_text_file(const std::string &path, const std::string &content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw IoError("write to '" + path + "' failed");
}

std::string read_text_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace geoctx
