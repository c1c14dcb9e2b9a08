#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geoctx/geodata.hpp"
#include "geoctx/histfn.hpp"

namespace geoctx {

inline constexpr std::size_t kMapCount = 10;
inline constexpr std::size_t kPatchSize = 17;
inline constexpr std::size_t kDefaultConceptCount = 594;

/// RGB raster georeferenced to a bounding box. Row 0 is the northern edge,
/// column 0 the western edge.
struct RasterMap {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    BoundingBox bbox;
    std::vector<std::uint8_t> pixels;  // rows * cols * 3, row-major RGB

    RasterMap() = default;
    RasterMap(std::string name, std::size_t rows, std::size_t cols, BoundingBox bbox,
              std::vector<std::uint8_t> pixels);

    /// Pixel containing the point; throws OutOfBoundsError naming the map.
    std::pair<std::size_t, std::size_t> pixel_of(const GeoPoint &p) const;
    const std::uint8_t *pixel(std::size_t row, std::size_t col) const {
        return pixels.data() + (row * cols + col) * 3;
    }
};

/// Clamped pixel coordinates of a square window; positions past the raster
/// edge repeat the nearest edge pixel.
struct PixelWindow {
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
};

PixelWindow clamp_patch(std::size_t center_row, std::size_t center_col, std::size_t patch_size,
                        std::size_t raster_rows, std::size_t raster_cols);

struct ZipEntry {
    std::string zip;
    GeoPoint centroid;
    std::vector<double> stats;
};

class ZipTable {
public:
    ZipTable() = default;
    explicit ZipTable(std::vector<ZipEntry> entries);

    const std::vector<ZipEntry> &entries() const { return entries_; }
    std::size_t dimension() const { return dim_; }
    bool empty() const { return entries_.empty(); }

    /// Entry with the nearest centroid; ties go to the smallest zip string.
    const ZipEntry &nearest(const GeoPoint &p) const;

private:
    std::vector<ZipEntry> entries_;
    std::size_t dim_ = 0;
};

std::vector<double> gps_encoding(const GeoPoint &point, const GridSpec &grid);

/// 17x17 patch from every map, bytes scaled by 1/255, concatenated in map
/// order, then row-major, then RGB.
std::vector<double> map_patch(const GeoPoint &point, const std::vector<RasterMap> &maps);

std::vector<double> acs_feature(const GeoPoint &point, const ZipTable &table);

/// Radius-pooled context histogram. For every radius (ascending) two blocks
/// of key_count entries: counts divided by the neighborhood total, then
/// counts divided by each key's global total. Zero denominators give 0.
std::vector<double> context_feature(const GeoPoint &point, const SpatialIndex &index,
                                    std::size_t key_count, const RadiiSet &radii);

inline std::vector<double> hashtag_context(const GeoPoint &point, const SpatialIndex &index,
                                           std::size_t hashtag_count, const RadiiSet &radii) {
    return context_feature(point, index, hashtag_count, radii);
}

/// Same pipeline as hashtag_context with probability weights per concept.
inline std::vector<double> visual_context(const GeoPoint &point, const SpatialIndex &index,
                                          std::size_t concept_count, const RadiiSet &radii) {
    return context_feature(point, index, concept_count, radii);
}

/// Fixed feature order used everywhere (bundles, caches, checkpoints).
enum class FeatureKind { Image, Gps, Map, Acs, Hashtag, Visual };
inline constexpr FeatureKind kAllFeatureKinds[] = {FeatureKind::Image, FeatureKind::Gps,
                                                   FeatureKind::Map,   FeatureKind::Acs,
                                                   FeatureKind::Hashtag, FeatureKind::Visual};

std::string feature_name(FeatureKind kind);
FeatureKind feature_from_name(const std::string &name);
bool is_context_feature(FeatureKind kind);

struct GeoRecord {
    std::string id;
    GeoPoint point;
    std::optional<int> label;
    std::vector<double> embedding;
    std::vector<std::uint32_t> tags;
    std::string split = "train";
};

struct NamedFeature {
    FeatureKind kind;
    std::vector<double> values;
};

/// Named feature vectors in FeatureKind order.
struct FeatureBundle {
    std::vector<NamedFeature> features;

    const NamedFeature *find(FeatureKind kind) const;
    std::map<std::string, std::size_t> dimensions() const;
    bool operator==(const FeatureBundle &o) const;
};

struct FeatureConfig {
    bool gps = false;
    bool map = false;
    bool acs = false;
    bool hashtag = false;
    bool visual = false;
    GridSpec gps_grid{100, 200};
    RadiiSet radii = RadiiSet::standard();
    std::size_t embedding_dim = 0;  // 0 accepts any length
};

/// Read-only inputs shared by all extractions.
struct FeatureResources {
    std::vector<RasterMap> maps;
    std::optional<ZipTable> zips;
    const SpatialIndex *hashtag_index = nullptr;
    std::size_t hashtag_count = 0;
    const SpatialIndex *concept_index = nullptr;
    std::size_t concept_count = kDefaultConceptCount;
};

/// Throws ConfigError when an enabled feature lacks its resource.
void check_resources(const FeatureConfig &config, const FeatureResources &resources);

FeatureBundle assemble(const GeoRecord &record, const FeatureConfig &config,
                       const FeatureResources &resources);

/// Closed-form dimension of each enabled feature.
std::map<std::string, std::size_t> expected_dimensions(const FeatureConfig &config,
                                                       const FeatureResources &resources);

}  // namespace geoctx
