#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace geoctx {

inline constexpr double kEarthRadiusM = 6'371'000.0;

struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;

    bool operator==(const GeoPoint &) const = default;
};

/// Throws InvalidArgument unless lon in [-180, 180] and lat in [-90, 90].
void validate(const GeoPoint &p);

struct BoundingBox {
    double lon_min = -125.0;
    double lon_max = -66.0;
    double lat_min = 24.0;
    double lat_max = 50.0;

    bool contains(const GeoPoint &p) const {
        return p.lon >= lon_min && p.lon <= lon_max && p.lat >= lat_min && p.lat <= lat_max;
    }
    double lon_span() const { return lon_max - lon_min; }
    double lat_span() const { return lat_max - lat_min; }

    bool operator==(const BoundingBox &) const = default;
};

/// Contiguous United States.
inline constexpr BoundingBox kConusBox{-125.0, -66.0, 24.0, 50.0};

/// rows divide latitude, cols divide longitude.
struct GridSpec {
    std::size_t rows = 1;
    std::size_t cols = 1;
    BoundingBox bbox = kConusBox;

    GridSpec() = default;
    GridSpec(std::size_t r, std::size_t c, BoundingBox b = kConusBox);

    std::uint64_t cell_count() const { return static_cast<std::uint64_t>(rows) * cols; }
    double cell_lat() const { return bbox.lat_span() / static_cast<double>(rows); }
    double cell_lon() const { return bbox.lon_span() / static_cast<double>(cols); }

    bool operator==(const GridSpec &) const = default;
};

struct CellIndex {
    std::size_t row = 0;
    std::size_t col = 0;
    std::uint64_t flat = 0;

    bool operator==(const CellIndex &) const = default;
};

CellIndex quantize(const GeoPoint &point, const GridSpec &grid);
CellIndex cell_from_flat(std::uint64_t flat, const GridSpec &grid);
GeoPoint cell_center(const CellIndex &cell, const GridSpec &grid);

/// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
double haversine_m(const GeoPoint &a, const GeoPoint &b);

/// One ingestion event for a spatial index.
struct KeyedPoint {
    GeoPoint point;
    std::uint32_t key = 0;
    double weight = 1.0;
};

/// Immutable grid-quantized index over (point, key, weight) events.
/// Aggregates are stored sparsely per nonempty cell; radius queries visit
/// only cells inside the bounding square of the query circle and test the
/// cell center against the radius (boundary inclusive).
class SpatialIndex {
public:
    struct Entry {
        std::uint32_t key;
        double weight;
    };

    const GridSpec &grid() const { return grid_; }
    std::size_t key_space() const { return key_space_; }
    std::size_t skipped() const { return skipped_; }
    std::size_t nonempty_cells() const { return cells_.size(); }

    /// Sum of all ingested weights for each key.
    std::span<const double> totals() const { return totals_; }

    /// Flat ids of nonempty cells, ascending.
    std::span<const std::uint64_t> cells() const { return cells_; }
    /// Per-key aggregates of the i-th nonempty cell, keys ascending.
    std::span<const Entry> cell_entries(std::size_t i) const;

    /// Per-key weight sums over cells whose center lies within r meters.
    std::vector<double> radius_aggregate(const GeoPoint &center, double r) const;

    /// Same as radius_aggregate for every radius at once; result is
    /// radius-major (radii.size() x key_space). Radii must be ascending.
    std::vector<double> radius_aggregate_multi(const GeoPoint &center,
                                               std::span<const double> radii) const;

    bool operator==(const SpatialIndex &) const;

private:
    friend SpatialIndex build_index(std::span<const KeyedPoint>, const GridSpec &, std::size_t);

    template <typename Visit>
    void visit_candidates(const GeoPoint &center, double r, Visit &&visit) const;

    GridSpec grid_;
    std::size_t key_space_ = 0;
    std::size_t skipped_ = 0;
    std::vector<std::uint64_t> cells_;
    std::vector<std::uint32_t> offsets_;  // cells_.size() + 1
    std::vector<Entry> entries_;
    std::vector<double> totals_;
};

/// Builds an index. Keys must be < key_space and weights >= 0; points outside
/// the grid box are skipped and counted. The result does not depend on the
/// order of `events`.
SpatialIndex build_index(std::span<const KeyedPoint> events, const GridSpec &grid,
                         std::size_t key_space);

}  // namespace geoctx
