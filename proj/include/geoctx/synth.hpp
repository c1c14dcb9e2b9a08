#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoctx/features.hpp"
#include "geoctx/geodata.hpp"

namespace geoctx {

/// Parameters of the synthetic benchmark. Location-sensitive classes live
/// around a few compact hotspots and their hashtags cluster there too;
/// insensitive classes follow the overall photo density.
struct SynthSpec {
    std::size_t classes = 20;
    std::size_t sensitive = 15;
    std::size_t train = 5000;
    std::size_t test = 1000;
    BoundingBox bbox = kConusBox;

    std::size_t embedding_dim = 32;
    double snr = 0.35;           // prototype scale relative to unit noise
    double location_purity = 0.8;  // share of a sensitive class drawn from its hotspots

    std::size_t cities = 25;
    double city_sigma_km = 30.0;
    std::size_t max_hotspots = 3;
    double hotspot_sigma_min_km = 1.5;
    double hotspot_sigma_max_km = 6.0;

    std::size_t tags_per_class = 1500;
    double tag_purity = 0.7;

    std::size_t concept_count = 16;
    std::size_t concept_images = 4000;

    std::size_t map_rows = 128;
    std::size_t map_cols = 256;
    std::size_t zips = 300;
    std::size_t acs_dim = 16;

    std::uint64_t seed = 1;

    void validate() const;
    nlohmann::json to_json() const;
};

struct SynthData {
    std::vector<GeoRecord> records;
    std::vector<KeyedPoint> hashtags;
    std::vector<std::pair<GeoPoint, std::vector<double>>> concepts;
    std::vector<RasterMap> maps;
    ZipTable zips;
    std::vector<bool> sensitive;  // per class
};

SynthData generate_synthetic(const SynthSpec &spec);

/// Writes records.jsonl, corpus.jsonl, concepts.jsonl, zips.csv,
/// maps/map_XX.georaster and synth.json into `dir`.
void write_synthetic(const SynthData &data, const SynthSpec &spec, const std::string &dir);

}  // namespace geoctx
