#include "geoctx/geodata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <tuple>

#include "geoctx/error.hpp"

namespace geoctx {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::string describe(const GeoPoint &p) {
    std::ostringstream os;
    os.precision(10);
    os << "(lon=" << p.lon << ", lat=" << p.lat << ")";
    return os.str();
}

std::size_t clamp_index(double v, std::size_t n) {
    if (!(v > 0.0)) return 0;
    if (v >= static_cast<double>(n - 1)) return n - 1;
    return static_cast<std::size_t>(v);
}

}  // namespace

void validate(const GeoPoint &p) {
    if (!(p.lon >= -180.0 && p.lon <= 180.0 && p.lat >= -90.0 && p.lat <= 90.0)) {
        throw InvalidArgument("invalid coordinate " + describe(p));
    }
}

GridSpec::GridSpec(std::size_t r, std::size_t c, BoundingBox b) : rows(r), cols(c), bbox(b) {
    if (rows < 1 || cols < 1) throw InvalidArgument("grid needs at least one row and column");
    if (!(bbox.lon_min < bbox.lon_max) || !(bbox.lat_min < bbox.lat_max)) {
        throw InvalidArgument("grid bounding box is empty");
    }
    if (static_cast<double>(rows) * static_cast<double>(cols) > 0x1.0p62) {
        throw InvalidArgument("grid cell count overflows the index range");
    }
}

CellIndex quantize(const GeoPoint &point, const GridSpec &grid) {
    if (!grid.bbox.contains(point)) {
        throw OutOfBoundsError("coordinate " + describe(point) + " is outside the grid box");
    }
    CellIndex c;
    c.row = clamp_index(std::floor((point.lat - grid.bbox.lat_min) / grid.cell_lat()), grid.rows);
    c.col = clamp_index(std::floor((point.lon - grid.bbox.lon_min) / grid.cell_lon()), grid.cols);
    c.flat = static_cast<std::uint64_t>(c.row) * grid.cols + c.col;
    return c;
}

CellIndex cell_from_flat(std::uint64_t flat, const GridSpec &grid) {
    if (flat >= grid.cell_count()) throw OutOfBoundsError("cell id out of range");
    return CellIndex{static_cast<std::size_t>(flat / grid.cols),
                     static_cast<std::size_t>(flat % grid.cols), flat};
}

GeoPoint cell_center(const CellIndex &cell, const GridSpec &grid) {
    if (cell.row >= grid.rows || cell.col >= grid.cols ||
        cell.flat != static_cast<std::uint64_t>(cell.row) * grid.cols + cell.col) {
        throw OutOfBoundsError("cell (" + std::to_string(cell.row) + ", " +
                               std::to_string(cell.col) + ") is not valid for the grid");
    }
    return GeoPoint{grid.bbox.lon_min + (static_cast<double>(cell.col) + 0.5) * grid.cell_lon(),
                    grid.bbox.lat_min + (static_cast<double>(cell.row) + 0.5) * grid.cell_lat()};
}

double haversine_m(const GeoPoint &a, const GeoPoint &b) {
    const double phi1 = a.lat * kDegToRad;
    const double phi2 = b.lat * kDegToRad;
    const double s_phi = std::sin((phi2 - phi1) * 0.5);
    const double s_lam = std::sin((b.lon - a.lon) * kDegToRad * 0.5);
    double h = s_phi * s_phi + std::cos(phi1) * std::cos(phi2) * s_lam * s_lam;
    h = std::clamp(h, 0.0, 1.0);
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

std::span<const SpatialIndex::Entry> SpatialIndex::cell_entries(std::size_t i) const {
    return std::span<const Entry>(entries_).subspan(offsets_[i], offsets_[i + 1] - offsets_[i]);
}

bool SpatialIndex::operator==(const SpatialIndex &o) const {
    auto same_entries = [](const std::vector<Entry> &a, const std::vector<Entry> &b) {
        return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                          [](const Entry &x, const Entry &y) {
                              return x.key == y.key && x.weight == y.weight;
                          });
    };
    return grid_ == o.grid_ && key_space_ == o.key_space_ && skipped_ == o.skipped_ &&
           cells_ == o.cells_ && offsets_ == o.offsets_ && same_entries(entries_, o.entries_) &&
           totals_ == o.totals_;
}

template <typename Visit>
void SpatialIndex::visit_candidates(const GeoPoint &center, double r, Visit &&visit) const {
    if (!(r > 0.0) || !std::isfinite(r)) throw InvalidArgument("radius must be positive");
    if (cells_.empty()) return;

    const BoundingBox &bb = grid_.bbox;
    const double ang = r / kEarthRadiusM;  // central angle, radians
    const double dlat = ang * kRadToDeg;

    // Great-circle distance is at least the meridional separation, so only
    // rows whose center latitude lies within dlat can match. One extra row on
    // each side absorbs rounding; the distance test below is authoritative.
    const double lat_step = grid_.cell_lat();
    const double row_lo_f = std::floor((center.lat - dlat - bb.lat_min) / lat_step - 0.5) - 1.0;
    const double row_hi_f = std::ceil((center.lat + dlat - bb.lat_min) / lat_step - 0.5) + 1.0;
    if (row_hi_f < 0.0 || row_lo_f > static_cast<double>(grid_.rows - 1)) return;
    const std::size_t row_lo = row_lo_f < 0.0 ? 0 : static_cast<std::size_t>(row_lo_f);
    const std::size_t row_hi = std::min<double>(row_hi_f, static_cast<double>(grid_.rows - 1));

    // hav(d) >= cos(phi1) cos(phi2) hav(dlon) bounds the longitude window.
    bool all_lon = false;
    double dlon = 180.0;
    const double band_lo = center.lat - dlat;
    const double band_hi = center.lat + dlat;
    if (band_lo <= -90.0 || band_hi >= 90.0 || ang >= std::numbers::pi) {
        all_lon = true;
    } else {
        const double cos_min = std::min(std::cos(band_lo * kDegToRad), std::cos(band_hi * kDegToRad));
        const double s_half = std::sin(ang * 0.5);
        const double s = s_half * s_half / (std::cos(center.lat * kDegToRad) * cos_min);
        if (s >= 1.0) {
            all_lon = true;
        } else {
            dlon = 2.0 * std::asin(std::sqrt(s)) * kRadToDeg;
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> col_ranges;
    const double lon_step = grid_.cell_lon();
    if (all_lon || dlon >= 180.0) {
        col_ranges.emplace_back(0, grid_.cols - 1);
    } else {
        for (double shift : {-360.0, 0.0, 360.0}) {
            const double lo = center.lon - dlon + shift;
            const double hi = center.lon + dlon + shift;
            if (hi < bb.lon_min || lo > bb.lon_max) continue;
            const double c_lo = std::floor((lo - bb.lon_min) / lon_step - 0.5) - 1.0;
            const double c_hi = std::ceil((hi - bb.lon_min) / lon_step - 0.5) + 1.0;
            if (c_hi < 0.0 || c_lo > static_cast<double>(grid_.cols - 1)) continue;
            col_ranges.emplace_back(
                c_lo < 0.0 ? 0 : static_cast<std::size_t>(c_lo),
                static_cast<std::size_t>(std::min<double>(c_hi, static_cast<double>(grid_.cols - 1))));
        }
        std::sort(col_ranges.begin(), col_ranges.end());
        std::vector<std::pair<std::size_t, std::size_t>> merged;
        for (const auto &rg : col_ranges) {
            if (!merged.empty() && rg.first <= merged.back().second + 1) {
                merged.back().second = std::max(merged.back().second, rg.second);
            } else {
                merged.push_back(rg);
            }
        }
        col_ranges = std::move(merged);
    }

    for (std::size_t row = row_lo; row <= row_hi; ++row) {
        const std::uint64_t base = static_cast<std::uint64_t>(row) * grid_.cols;
        for (const auto &[c_lo, c_hi] : col_ranges) {
            auto it = std::lower_bound(cells_.begin(), cells_.end(), base + c_lo);
            for (; it != cells_.end() && *it <= base + c_hi; ++it) {
                const auto idx = static_cast<std::size_t>(it - cells_.begin());
                const GeoPoint cc = cell_center(cell_from_flat(*it, grid_), grid_);
                visit(idx, haversine_m(center, cc));
            }
        }
    }
}

std::vector<double> SpatialIndex::radius_aggregate(const GeoPoint &center, double r) const {
    std::vector<double> out(key_space_, 0.0);
    visit_candidates(center, r, [&](std::size_t idx, double d) {
        if (d > r) return;
        for (const Entry &e : cell_entries(idx)) out[e.key] += e.weight;
    });
    return out;
}

std::vector<double> SpatialIndex::radius_aggregate_multi(const GeoPoint &center,
                                                         std::span<const double> radii) const {
    std::vector<double> out(radii.size() * key_space_, 0.0);
    if (radii.empty()) return out;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0)) throw InvalidArgument("radius must be positive");
        if (i > 0 && !(radii[i] > radii[i - 1])) throw InvalidArgument("radii must be ascending");
    }
    visit_candidates(center, radii.back(), [&](std::size_t idx, double d) {
        auto first = std::lower_bound(radii.begin(), radii.end(), d);
        for (auto rit = first; rit != radii.end(); ++rit) {
            double *row = out.data() + static_cast<std::size_t>(rit - radii.begin()) * key_space_;
            for (const Entry &e : cell_entries(idx)) row[e.key] += e.weight;
        }
    });
    return out;
}

SpatialIndex build_index(std::span<const KeyedPoint> events, const GridSpec &grid,
                         std::size_t key_space) {
    struct Item {
        std::uint64_t flat;
        std::uint32_t key;
        double weight;
    };
    std::vector<Item> items;
    items.reserve(events.size());

    SpatialIndex index;
    index.grid_ = grid;
    index.key_space_ = key_space;
    for (const KeyedPoint &ev : events) {
        if (ev.key >= key_space) {
            throw InvalidArgument("key " + std::to_string(ev.key) + " outside key space of " +
                                  std::to_string(key_space));
        }
        if (!(ev.weight >= 0.0) || !std::isfinite(ev.weight)) {
            throw InvalidArgument("weights must be finite and non-negative");
        }
        if (!grid.bbox.contains(ev.point)) {
            ++index.skipped_;
            continue;
        }
        items.push_back({quantize(ev.point, grid).flat, ev.key, ev.weight});
    }
    if (index.skipped_ > 0) {
        warn("build_index: skipped " + std::to_string(index.skipped_) +
             " points outside the grid box");
    }

    // Sorting fixes the summation order, which makes the index independent of
    // the ingestion order down to the last bit.
    std::sort(items.begin(), items.end(), [](const Item &a, const Item &b) {
        return std::tie(a.flat, a.key, a.weight) < std::tie(b.flat, b.key, b.weight);
    });

    index.offsets_.push_back(0);
    for (std::size_t i = 0; i < items.size();) {
        const std::uint64_t flat = items[i].flat;
        index.cells_.push_back(flat);
        while (i < items.size() && items[i].flat == flat) {
            const std::uint32_t key = items[i].key;
            double sum = 0.0;
            for (; i < items.size() && items[i].flat == flat && items[i].key == key; ++i) {
                sum += items[i].weight;
            }
            index.entries_.push_back({key, sum});
        }
        index.offsets_.push_back(static_cast<std::uint32_t>(index.entries_.size()));
    }

    index.totals_.assign(key_space, 0.0);
    for (const auto &e : index.entries_) index.totals_[e.key] += e.weight;
    return index;
}

}  // namespace geoctx
