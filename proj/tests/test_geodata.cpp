#include <doctest.h>

#include <cmath>

#include "geoctx/error.hpp"
#include "geoctx/geodata.hpp"
#include "oracles.hpp"
#include "warnings.hpp"

using namespace geoctx;

namespace {

const BoundingBox kUnit{0.0, 10.0, 0.0, 10.0};

std::vector<KeyedPoint> random_events(Rng &rng, std::size_t n, std::size_t keys, const BoundingBox &bb,
                                      bool weighted) {
    std::vector<KeyedPoint> ev;
    for (std::size_t i = 0; i < n; ++i) {
        ev.push_back({oracle::random_point(rng, bb), static_cast<std::uint32_t>(rng.below(keys)),
                      weighted ? rng.uniform() : 1.0});
    }
    return ev;
}

}  // namespace

TEST_CASE("quantize: corners and the floor formula") {
    const GridSpec g(10, 10, kUnit);
    CHECK(quantize({0.0, 0.0}, g) == CellIndex{0, 0, 0});
    CHECK(quantize({10.0, 10.0}, g) == CellIndex{9, 9, 99});
    const CellIndex c = quantize({3.7, 8.2}, g);
    CHECK(c.row == 8);
    CHECK(c.col == 3);
    CHECK(c.flat == 83);

    const GridSpec conus(100, 200);
    CHECK(quantize({kConusBox.lon_min, kConusBox.lat_min}, conus) == CellIndex{0, 0, 0});
    CHECK(quantize({kConusBox.lon_max, kConusBox.lat_max}, conus) == CellIndex{99, 199, 99 * 200 + 199});
}

TEST_CASE("quantize rejects points outside the box and names them") {
    const GridSpec g(10, 10, kUnit);
    try {
        quantize({10.5, 3.0}, g);
        FAIL("expected an exception");
    } catch (const OutOfBoundsError &e) {
        CHECK(std::string(e.what()).find("lon=10.5") != std::string::npos);
        CHECK(e.code() == "out_of_bounds");
    }
    CHECK_THROWS_AS(quantize({5.0, -0.1}, g), OutOfBoundsError);
}

TEST_CASE("cell_center: examples and roundtrip") {
    CHECK(cell_center(CellIndex{0, 0, 0}, GridSpec(1, 1, kUnit)) == GeoPoint{5.0, 5.0});
    const GridSpec g(10, 10, kUnit);
    const GeoPoint c = cell_center(CellIndex{8, 3, 83}, g);
    CHECK(c.lon == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(c.lat == doctest::Approx(8.5).epsilon(1e-12));
    CHECK_THROWS_AS(cell_center(CellIndex{10, 0, 100}, g), OutOfBoundsError);
    CHECK_THROWS_AS(cell_center(CellIndex{1, 1, 5}, g), OutOfBoundsError);

    Rng rng(11);
    const GridSpec fine(2500, 5000);
    for (int i = 0; i < 1000; ++i) {
        const CellIndex cell = cell_from_flat(rng.below(fine.cell_count()), fine);
        CHECK(quantize(cell_center(cell, fine), fine) == cell);
    }
}

TEST_CASE("haversine: reference distances") {
    CHECK(haversine_m({-100.0, 40.0}, {-100.0, 40.0}) == 0.0);
    CHECK(haversine_m({0, 0}, {1, 0}) == doctest::Approx(111195.0).epsilon(1.0 / 111195.0));
    CHECK(std::abs(haversine_m({0, 0}, {1, 0}) - 111194.93) < 1.0);
    CHECK(haversine_m({0, 0}, {180, 0}) == doctest::Approx(M_PI * 6371000.0).epsilon(1e-12));
}

TEST_CASE("haversine: symmetry and triangle inequality") {
    Rng rng(3);
    const BoundingBox world{-180, 180, -90, 90};
    for (int i = 0; i < 500; ++i) {
        const GeoPoint a = oracle::random_point(rng, world);
        const GeoPoint b = oracle::random_point(rng, world);
        const GeoPoint c = oracle::random_point(rng, world);
        const double ab = haversine_m(a, b), bc = haversine_m(b, c), ac = haversine_m(a, c);
        CHECK(ab == haversine_m(b, a));
        CHECK(ac <= (ab + bc) * (1 + 1e-6));
        CHECK(oracle::rel_err(ab, oracle::distance_m(a, b)) < 1e-9);
    }
}

TEST_CASE("build_index: totals, skipping and key validation") {
    const GridSpec g(50, 100);
    SUBCASE("empty") {
        const SpatialIndex idx = build_index({}, g, 4);
        CHECK(idx.nonempty_cells() == 0);
        for (double t : idx.totals()) CHECK(t == 0.0);
        CHECK(idx.radius_aggregate({-100, 40}, 5000) == std::vector<double>(4, 0.0));
    }
    SUBCASE("single point") {
        const std::vector<KeyedPoint> ev{{{-100.0, 40.0}, 3, 1.0}};
        const SpatialIndex idx = build_index(ev, g, 5);
        CHECK(idx.nonempty_cells() == 1);
        CHECK(idx.totals()[3] == 1.0);
        CHECK(idx.cell_entries(0).size() == 1);
        CHECK(idx.cell_entries(0)[0].weight == 1.0);
    }
    SUBCASE("random multiset") {
        Rng rng(5);
        const auto ev = random_events(rng, 100, 7, kConusBox, false);
        const SpatialIndex idx = build_index(ev, g, 7);
        std::vector<double> tally(7, 0.0);
        for (const auto &e : ev) tally[e.key] += 1;
        CHECK(std::vector<double>(idx.totals().begin(), idx.totals().end()) == tally);
        // per-cell aggregates add up to the totals
        std::vector<double> from_cells(7, 0.0);
        for (std::size_t i = 0; i < idx.nonempty_cells(); ++i) {
            for (const auto &e : idx.cell_entries(i)) from_cells[e.key] += e.weight;
        }
        CHECK(from_cells == tally);
    }
    SUBCASE("out-of-box points are skipped with a warning") {
        WarningCapture warnings;
        const std::vector<KeyedPoint> ev{{{-100.0, 40.0}, 0, 1.0}, {{10.0, 40.0}, 1, 1.0}};
        const SpatialIndex idx = build_index(ev, g, 2);
        CHECK(idx.skipped() == 1);
        CHECK(idx.totals()[1] == 0.0);
        CHECK(warnings.seen().size() == 1);
    }
    SUBCASE("invalid input") {
        const std::vector<KeyedPoint> bad_key{{{-100.0, 40.0}, 9, 1.0}};
        CHECK_THROWS_AS(build_index(bad_key, g, 9), InvalidArgument);
        const std::vector<KeyedPoint> bad_weight{{{-100.0, 40.0}, 0, -1.0}};
        CHECK_THROWS_AS(build_index(bad_weight, g, 1), InvalidArgument);
    }
}

TEST_CASE("build_index does not depend on ingestion order") {
    Rng rng(9);
    auto ev = random_events(rng, 2000, 12, kConusBox, true);
    // add some exact duplicates of cells with different weights
    for (int i = 0; i < 200; ++i) ev.push_back({ev[i].point, ev[i].key, rng.uniform()});
    const GridSpec g(2500, 5000);
    const SpatialIndex a = build_index(ev, g, 12);
    for (int trial = 0; trial < 5; ++trial) {
        rng.shuffle(ev);
        CHECK(build_index(ev, g, 12) == a);
    }
}

TEST_CASE("radius_aggregate matches a brute-force scan") {
    Rng rng(21);
    const GridSpec g(25000, 50000);
    // clustered points so radii of a few km capture many cells
    std::vector<KeyedPoint> ev;
    std::vector<GeoPoint> hubs;
    for (int i = 0; i < 8; ++i) hubs.push_back(oracle::random_point(rng, kConusBox));
    for (int i = 0; i < 1000; ++i) {
        const GeoPoint p = oracle::jitter(rng, hubs[rng.below(hubs.size())], 12.0, kConusBox);
        ev.push_back({p, static_cast<std::uint32_t>(rng.below(6)), 1.0});
    }
    const SpatialIndex idx = build_index(ev, g, 6);
    for (int q = 0; q < 50; ++q) {
        const GeoPoint c = oracle::jitter(rng, hubs[rng.below(hubs.size())], 8.0, kConusBox);
        const double r = rng.uniform(200.0, 15000.0);
        CHECK(idx.radius_aggregate(c, r) == oracle::radius_scan(ev, g, 6, c, r));
    }
}

TEST_CASE("radius_aggregate: weighted sums, coarse grids and wide radii") {
    Rng rng(22);
    const auto ev = random_events(rng, 1000, 5, kConusBox, true);
    for (const GridSpec &g : {GridSpec(20, 40), GridSpec(200, 400), GridSpec(3, 3)}) {
        const SpatialIndex idx = build_index(ev, g, 5);
        for (int q = 0; q < 20; ++q) {
            const GeoPoint c = oracle::random_point(rng, kConusBox);
            const double r = rng.uniform(10e3, 3000e3);
            const auto got = idx.radius_aggregate(c, r);
            const auto want = oracle::radius_scan(ev, g, 5, c, r);
            for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(got[k] - want[k]) <= 1e-12 * std::max(1.0, want[k]));
        }
    }
}

TEST_CASE("radius_aggregate: monotone in r, covers everything at large r, rejects r <= 0") {
    Rng rng(23);
    const auto ev = random_events(rng, 500, 4, kConusBox, false);
    const SpatialIndex idx = build_index(ev, GridSpec(100, 200), 4);
    const GeoPoint c{-95.0, 37.0};
    std::vector<double> prev(4, 0.0);
    for (double r = 50e3; r < 3000e3; r *= 1.5) {
        const auto cur = idx.radius_aggregate(c, r);
        for (std::size_t k = 0; k < 4; ++k) CHECK(cur[k] >= prev[k]);
        prev = cur;
    }
    const auto all = idx.radius_aggregate(c, 20000e3);
    CHECK(all == std::vector<double>(idx.totals().begin(), idx.totals().end()));
    CHECK_THROWS_AS(idx.radius_aggregate(c, 0.0), InvalidArgument);
    CHECK_THROWS_AS(idx.radius_aggregate(c, -5.0), InvalidArgument);
}

TEST_CASE("radius_aggregate: a point at the query center is found at 1 km") {
    const std::vector<KeyedPoint> ev{{{-100.0, 40.0}, 2, 0.25}};
    const GridSpec g(25000, 50000);
    const SpatialIndex idx = build_index(ev, g, 3);
    const GeoPoint c = cell_center(quantize({-100.0, 40.0}, g), g);
    CHECK(idx.radius_aggregate(c, 1000.0) == std::vector<double>{0, 0, 0.25});
}

TEST_CASE("radius_aggregate: wrap-around near the antimeridian") {
    const BoundingBox world{-180, 180, -60, 60};
    const GridSpec g(120, 360, world);
    const std::vector<KeyedPoint> ev{{{179.7, 0.2}, 0, 1.0}, {{-179.7, 0.2}, 1, 1.0}};
    const SpatialIndex idx = build_index(ev, g, 2);
    const auto got = idx.radius_aggregate({179.9, 0.1}, 200e3);
    CHECK(got == oracle::radius_scan(ev, g, 2, {179.9, 0.1}, 200e3));
    CHECK(got == std::vector<double>{1.0, 1.0});
}

TEST_CASE("radius_aggregate_multi equals single-radius queries") {
    Rng rng(24);
    std::vector<KeyedPoint> ev;
    const GeoPoint hub{-87.6, 41.9};
    for (int i = 0; i < 800; ++i) ev.push_back({oracle::jitter(rng, hub, 15.0, kConusBox), static_cast<std::uint32_t>(rng.below(3)), 1.0});
    const SpatialIndex idx = build_index(ev, GridSpec(25000, 50000), 3);
    const std::vector<double> radii{1000, 2500, 4000, 9000};
    for (int q = 0; q < 10; ++q) {
        const GeoPoint c = oracle::jitter(rng, hub, 5.0, kConusBox);
        const auto multi = idx.radius_aggregate_multi(c, radii);
        for (std::size_t i = 0; i < radii.size(); ++i) {
            const auto single = idx.radius_aggregate(c, radii[i]);
            CHECK(std::vector<double>(multi.begin() + i * 3, multi.begin() + (i + 1) * 3) == single);
        }
    }
    CHECK_THROWS_AS(idx.radius_aggregate_multi(hub, std::vector<double>{2000, 1000}), InvalidArgument);
}
