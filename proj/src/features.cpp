#include "geoctx/features.hpp"

#include <algorithm>
#include <cmath>

#include "geoctx/error.hpp"

namespace geoctx {

RasterMap::RasterMap(std::string n, std::size_t r, std::size_t c, BoundingBox b,
                     std::vector<std::uint8_t> px)
    : name(std::move(n)), rows(r), cols(c), bbox(b), pixels(std::move(px)) {
    if (rows == 0 || cols == 0) throw InvalidArgument("raster '" + name + "' is empty");
    if (!(bbox.lon_min < bbox.lon_max) || !(bbox.lat_min < bbox.lat_max)) {
        throw InvalidArgument("raster '" + name + "' has an empty bounding box");
    }
    if (pixels.size() != rows * cols * 3) {
        throw FormatError("raster '" + name + "' has " + std::to_string(pixels.size()) +
                          " bytes, expected " + std::to_string(rows * cols * 3));
    }
}

std::pair<std::size_t, std::size_t> RasterMap::pixel_of(const GeoPoint &p) const {
    if (!bbox.contains(p)) {
        throw OutOfBoundsError("coordinate (lon=" + std::to_string(p.lon) +
                               ", lat=" + std::to_string(p.lat) + ") is outside map '" + name + "'");
    }
    const double fr = std::floor((bbox.lat_max - p.lat) / (bbox.lat_span() / static_cast<double>(rows)));
    const double fc = std::floor((p.lon - bbox.lon_min) / (bbox.lon_span() / static_cast<double>(cols)));
    const auto clampi = [](double v, std::size_t n) {
        return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n - 1)));
    };
    return {clampi(fr, rows), clampi(fc, cols)};
}

PixelWindow clamp_patch(std::size_t center_row, std::size_t center_col, std::size_t patch_size,
                        std::size_t raster_rows, std::size_t raster_cols) {
    if (patch_size % 2 == 0) throw InvalidArgument("patch size must be odd");
    const auto half = static_cast<std::ptrdiff_t>(patch_size / 2);
    const auto axis = [&](std::size_t center, std::size_t extent) {
        std::vector<std::size_t> idx(patch_size);
        for (std::size_t i = 0; i < patch_size; ++i) {
            const std::ptrdiff_t v = static_cast<std::ptrdiff_t>(center) - half + static_cast<std::ptrdiff_t>(i);
            idx[i] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(v, 0, static_cast<std::ptrdiff_t>(extent) - 1));
        }
        return idx;
    };
    return PixelWindow{axis(center_row, raster_rows), axis(center_col, raster_cols)};
}

ZipTable::ZipTable(std::vector<ZipEntry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) return;
    dim_ = entries_.front().stats.size();
    for (const auto &e : entries_) {
        validate(e.centroid);
        if (e.stats.size() != dim_) {
            throw ShapeError("zip " + e.zip + " has " + std::to_string(e.stats.size()) +
                             " statistics, expected " + std::to_string(dim_));
        }
    }
}

const ZipEntry &ZipTable::nearest(const GeoPoint &p) const {
    if (entries_.empty()) throw InvalidArgument("zip table is empty");
    const ZipEntry *best = nullptr;
    double best_d = 0.0;
    for (const auto &e : entries_) {
        const double d = haversine_m(p, e.centroid);
        if (!best || d < best_d || (d == best_d && e.zip < best->zip)) {
            best = &e;
            best_d = d;
        }
    }
    return *best;
}

std::vector<double> gps_encoding(const GeoPoint &point, const GridSpec &grid) {
    const CellIndex cell = quantize(point, grid);
    std::vector<double> v(grid.cell_count(), 0.0);
    v[cell.flat] = 1.0;
    return v;
}

std::vector<double> map_patch(const GeoPoint &point, const std::vector<RasterMap> &maps) {
    if (maps.size() != kMapCount) {
        throw InvalidArgument("map feature needs " + std::to_string(kMapCount) + " maps, got " +
                              std::to_string(maps.size()));
    }
    std::vector<double> out;
    out.reserve(maps.size() * kPatchSize * kPatchSize * 3);
    for (const RasterMap &m : maps) {
        const auto [r, c] = m.pixel_of(point);
        const PixelWindow w = clamp_patch(r, c, kPatchSize, m.rows, m.cols);
        for (std::size_t pr : w.rows) {
            for (std::size_t pc : w.cols) {
                const std::uint8_t *px = m.pixel(pr, pc);
                for (int ch = 0; ch < 3; ++ch) out.push_back(px[ch] / 255.0);
            }
        }
    }
    return out;
}

std::vector<double> acs_feature(const GeoPoint &point, const ZipTable &table) {
    return table.nearest(point).stats;
}

std::vector<double> context_feature(const GeoPoint &point, const SpatialIndex &index,
                                    std::size_t key_count, const RadiiSet &radii) {
    if (index.key_space() != key_count) {
        throw ShapeError("context index has " + std::to_string(index.key_space()) +
                         " keys, expected " + std::to_string(key_count));
    }
    const std::vector<double> pooled = index.radius_aggregate_multi(point, radii.values());
    const std::span<const double> totals = index.totals();
    std::vector<double> out(2 * key_count * radii.size(), 0.0);
    for (std::size_t r = 0; r < radii.size(); ++r) {
        const double *counts = pooled.data() + r * key_count;
        double *across = out.data() + r * 2 * key_count;
        double *within = across + key_count;
        double sum = 0.0;
        for (std::size_t k = 0; k < key_count; ++k) sum += counts[k];
        for (std::size_t k = 0; k < key_count; ++k) {
            across[k] = sum > 0.0 ? counts[k] / sum : 0.0;
            within[k] = totals[k] > 0.0 ? counts[k] / totals[k] : 0.0;
        }
    }
    return out;
}

std::string feature_name(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::Image: return "image";
        case FeatureKind::Gps: return "gps";
        case FeatureKind::Map: return "map";
        case FeatureKind::Acs: return "acs";
        case FeatureKind::Hashtag: return "hashtag";
        case FeatureKind::Visual: return "visual";
    }
    return "unknown";
}

FeatureKind feature_from_name(const std::string &name) {
    for (FeatureKind k : kAllFeatureKinds) {
        if (feature_name(k) == name) return k;
    }
    throw ConfigError("unknown feature '" + name + "'");
}

bool is_context_feature(FeatureKind kind) {
    return kind == FeatureKind::Hashtag || kind == FeatureKind::Visual;
}

const NamedFeature *FeatureBundle::find(FeatureKind kind) const {
    for (const auto &f : features) {
        if (f.kind == kind) return &f;
    }
    return nullptr;
}

std::map<std::string, std::size_t> FeatureBundle::dimensions() const {
    std::map<std::string, std::size_t> dims;
    for (const auto &f : features) dims[feature_name(f.kind)] = f.values.size();
    return dims;
}

bool FeatureBundle::operator==(const FeatureBundle &o) const {
    if (features.size() != o.features.size()) return false;
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (features[i].kind != o.features[i].kind || features[i].values != o.features[i].values) {
            return false;
        }
    }
    return true;
}

void check_resources(const FeatureConfig &config, const FeatureResources &res) {
    if (config.map && res.maps.size() != kMapCount) {
        throw ConfigError("map feature enabled but " + std::to_string(res.maps.size()) +
                          " of " + std::to_string(kMapCount) + " maps loaded");
    }
    if (config.acs && (!res.zips || res.zips->empty())) {
        throw ConfigError("acs feature enabled but no zip table loaded");
    }
    if (config.hashtag && !res.hashtag_index) {
        throw ConfigError("hashtag feature enabled but no hashtag corpus loaded");
    }
    if (config.visual && !res.concept_index) {
        throw ConfigError("visual feature enabled but no concept corpus loaded");
    }
}

FeatureBundle assemble(const GeoRecord &record, const FeatureConfig &config,
                       const FeatureResources &res) {
    check_resources(config, res);
    if (config.embedding_dim != 0 && record.embedding.size() != config.embedding_dim) {
        throw ShapeError("record " + record.id + " has embedding of length " +
                         std::to_string(record.embedding.size()) + ", expected " +
                         std::to_string(config.embedding_dim));
    }
    FeatureBundle b;
    b.features.push_back({FeatureKind::Image, record.embedding});
    if (config.gps) b.features.push_back({FeatureKind::Gps, gps_encoding(record.point, config.gps_grid)});
    if (config.map) b.features.push_back({FeatureKind::Map, map_patch(record.point, res.maps)});
    if (config.acs) b.features.push_back({FeatureKind::Acs, acs_feature(record.point, *res.zips)});
    if (config.hashtag) {
        b.features.push_back({FeatureKind::Hashtag,
                              hashtag_context(record.point, *res.hashtag_index, res.hashtag_count,
                                              config.radii)});
    }
    if (config.visual) {
        b.features.push_back({FeatureKind::Visual,
                              visual_context(record.point, *res.concept_index, res.concept_count,
                                             config.radii)});
    }
    for (const auto &f : b.features) {
        for (double v : f.values) {
            if (!std::isfinite(v)) {
                throw InvalidArgument("record " + record.id + ": non-finite value in " +
                                      feature_name(f.kind) + " feature");
            }
        }
    }
    return b;
}

std::map<std::string, std::size_t> expected_dimensions(const FeatureConfig &config,
                                                       const FeatureResources &res) {
    std::map<std::string, std::size_t> dims;
    dims["image"] = config.embedding_dim;
    if (config.gps) dims["gps"] = config.gps_grid.cell_count();
    if (config.map) dims["map"] = kMapCount * kPatchSize * kPatchSize * 3;
    if (config.acs) dims["acs"] = res.zips ? res.zips->dimension() : 0;
    if (config.hashtag) dims["hashtag"] = 2 * res.hashtag_count * config.radii.size();
    if (config.visual) dims["visual"] = 2 * res.concept_count * config.radii.size();
    return dims;
}

}  // namespace geoctx
