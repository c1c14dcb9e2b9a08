#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoctx/features.hpp"
#include "geoctx/geodata.hpp"
#include "geoctx/histfn.hpp"

namespace geoctx {

// records.jsonl: {"id", "lon", "lat", "label"?, "embedding": [...], "tags": [...], "split"?}
std::vector<GeoRecord> read_records(const std::string &path);
void write_records(const std::string &path, const std::vector<GeoRecord> &records);

// corpus.jsonl: {"lon", "lat", "key", "weight"?}; weight defaults to 1.
std::vector<KeyedPoint> read_corpus(const std::string &path);
void write_corpus(const std::string &path, const std::vector<KeyedPoint> &events);

struct ConceptCorpus {
    std::size_t concept_count = 0;
    std::vector<KeyedPoint> events;  // one per nonzero probability
};

// concepts.jsonl: {"lon", "lat", "probs": [...]}
ConceptCorpus read_concepts(const std::string &path);
void write_concepts(const std::string &path, const std::vector<std::pair<GeoPoint, std::vector<double>>> &images);

// "GEORASTER v1\n<rows> <cols>\n<lon_min> <lat_min> <lon_max> <lat_max>\n" + RGB bytes
RasterMap load_raster(const std::string &path);
void save_raster(const std::string &path, const RasterMap &map);

// zip,lon,lat,v1,...,vD with an optional header line starting with "zip".
ZipTable load_zip_table(const std::string &path);
void save_zip_table(const std::string &path, const ZipTable &table);

/// One extracted record. Context features also carry their histogram bank.
struct CachedRecord {
    std::string id;
    std::optional<int> label;
    std::string split;
    GeoPoint point;
    FeatureBundle bundle;
    std::vector<std::pair<FeatureKind, HistFnBank>> banks;

    const HistFnBank *bank(FeatureKind kind) const;
};

struct FeatureCache {
    std::size_t classes = 0;
    RadiiSet radii = RadiiSet::standard();
    std::map<std::string, std::size_t> dims;
    std::map<std::string, std::size_t> key_counts;  // per context feature
    nlohmann::json config;                          // resolved extraction config echo
    std::vector<CachedRecord> records;

    nlohmann::json manifest() const;
};

// "GEOCTXFC" magic, u32 version, JSON manifest, then per record: id, label
// (i32, -1 when absent), split, lon, lat, each feature vector in manifest
// order (dense, or sparse index/value pairs when mostly zero), and each
// bank's (fn_count x |R|) values.
void save_feature_cache(const std::string &path, const FeatureCache &cache);
FeatureCache load_feature_cache(const std::string &path);

void write_text_file(const std::string &path, const std::string &content);
std::string read_text_file(const std::string &path);

}  // namespace geoctx
