#include <doctest.h>

#include <cmath>

#include "geoctx/error.hpp"
#include "geoctx/random.hpp"
#include "geoctx/selection.hpp"
#include "oracles.hpp"

using namespace geoctx;

namespace {

const GridSpec kTwoCells(1, 2, BoundingBox{0.0, 2.0, 0.0, 1.0});

GeoDistribution two_cell(double p0, double p1) {
    GeoDistribution d;
    d.grid = kTwoCells;
    d.probs = {{0, p0}, {1, p1}};
    return d;
}

std::vector<GeoPoint> cluster(Rng &rng, GeoPoint c, double km, std::size_t n) {
    std::vector<GeoPoint> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(oracle::jitter(rng, c, km, kConusBox));
    return out;
}

double dense_kl(const GeoDistribution &p, const GeoDistribution &q) {
    double sum = 0.0;
    for (std::uint64_t c = 0; c < p.grid.cell_count(); ++c) {
        const double a = p.prob(c);
        if (a > 0) sum += a * std::log(a / q.prob(c));
    }
    return sum;
}

}  // namespace

TEST_CASE("KL divergence of a two-cell example") {
    const double kl = kl_divergence(two_cell(0.5, 0.5), two_cell(0.75, 0.25));
    CHECK(kl == doctest::Approx(0.5 * std::log(0.5 / 0.75) + 0.5 * std::log(2.0)));
    CHECK(kl == doctest::Approx(0.1438).epsilon(1e-3));
    // not symmetric
    CHECK(kl_divergence(two_cell(0.75, 0.25), two_cell(0.5, 0.5)) != doctest::Approx(kl));
    CHECK(kl_divergence(two_cell(0.3, 0.7), two_cell(0.3, 0.7)) == doctest::Approx(0.0));
}

TEST_CASE("zero mass in Q under positive P is a support error") {
    CHECK_THROWS_AS(kl_divergence(two_cell(0.5, 0.5), two_cell(1.0, 0.0)), SupportError);
    // zero mass in P is fine
    CHECK(kl_divergence(two_cell(1.0, 0.0), two_cell(0.5, 0.5)) == doctest::Approx(std::log(2.0)));
    GeoDistribution other = two_cell(0.5, 0.5);
    other.grid = GridSpec(2, 1, kTwoCells.bbox);
    CHECK_THROWS_AS(kl_divergence(two_cell(0.5, 0.5), other), ShapeError);
}

TEST_CASE("estimated distributions tally counts with smoothing") {
    const GridSpec g(2, 2, BoundingBox{0, 2, 0, 2});
    const std::vector<GeoPoint> pts{{0.5, 0.5}, {0.5, 0.6}, {1.5, 1.5}, {50, 50}};
    const GeoDistribution d = estimate_distribution(pts, g, 1.0);
    // 3 points inside, 4 cells: (count + 1) / 7
    CHECK(d.prob(quantize({0.5, 0.5}, g).flat) == doctest::Approx(3.0 / 7));
    CHECK(d.prob(quantize({1.5, 1.5}, g).flat) == doctest::Approx(2.0 / 7));
    CHECK(d.prob(quantize({1.5, 0.5}, g).flat) == doctest::Approx(1.0 / 7));
    CHECK(d.total() == doctest::Approx(1.0));
    const GeoDistribution raw = estimate_distribution(pts, g, 0.0);
    CHECK(raw.prob(quantize({0.5, 0.5}, g).flat) == doctest::Approx(2.0 / 3));
    CHECK(raw.background == 0.0);
    CHECK_THROWS_AS(estimate_distribution(std::vector<GeoPoint>{}, g, 0.0), InvalidArgument);
    CHECK_THROWS_AS(estimate_distribution(pts, g, -1.0), InvalidArgument);
}

TEST_CASE("sparse KL matches a dense sum and Gibbs' inequality holds") {
    Rng rng(23);
    const GridSpec g(20, 40);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<GeoPoint> a, b;
        for (int i = 0; i < 300; ++i) a.push_back(oracle::random_point(rng, kConusBox));
        b = cluster(rng, oracle::random_point(rng, kConusBox), 200, 100);
        const GeoDistribution p = estimate_distribution(a, g, 0.01 * trial);
        const GeoDistribution q = estimate_distribution(b, g, 0.01 + 0.1 * trial);
        const double kl = kl_divergence(p, q);
        CHECK(kl >= 0.0);
        CHECK(kl == doctest::Approx(dense_kl(p, q)).epsilon(1e-9));
        CHECK(kl_divergence(p, p) == doctest::Approx(0.0).scale(1));
    }
}

TEST_CASE("class selection ranks concentrated classes first") {
    Rng rng(24);
    const GridSpec g(25, 50);
    std::vector<GeoPoint> population;
    for (int i = 0; i < 4000; ++i) population.push_back(oracle::random_point(rng, kConusBox));
    const GeoDistribution p = estimate_distribution(population, g, 0.01);

    std::map<int, GeoDistribution> q;
    // class 0 follows the population, classes 1 and 2 are tight clusters
    std::vector<GeoPoint> spread(population.begin(), population.begin() + 500);
    q[0] = estimate_distribution(spread, g, 0.01);
    q[1] = estimate_distribution(cluster(rng, {-100, 40}, 50, 500), g, 0.01);
    q[2] = estimate_distribution(cluster(rng, {-80, 35}, 300, 500), g, 0.01);
    q[3] = q[1];

    const auto all = select_classes(p, q, 10);
    REQUIRE(all.size() == 4);
    CHECK(all.back().cls == 0);
    for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1].kl >= all[i].kl);
    // equal divergences keep class-id order
    CHECK(all[0].cls == 1);
    CHECK(all[1].cls == 3);
    CHECK(all[0].kl == all[1].kl);

    CHECK(select_classes(p, q, 2).size() == 2);
    const auto above = select_classes(p, q, 10, all[2].kl);
    CHECK(above.size() == 3);
    CHECK(select_classes(p, q, 10, 1e9).empty());
}

TEST_CASE("KL is unchanged when every count is scaled") {
    Rng rng(25);
    const GridSpec g(10, 20);
    std::vector<GeoPoint> a, b;
    for (int i = 0; i < 200; ++i) a.push_back(oracle::random_point(rng, kConusBox));
    for (int i = 0; i < 100; ++i) b.push_back(oracle::random_point(rng, kConusBox));
    auto triple = [](const std::vector<GeoPoint> &v) {
        std::vector<GeoPoint> out;
        for (int k = 0; k < 3; ++k) out.insert(out.end(), v.begin(), v.end());
        return out;
    };
    const double once = kl_divergence(estimate_distribution(a, g, 0.0), estimate_distribution(b, g, 1.0));
    const double thrice =
        kl_divergence(estimate_distribution(triple(a), g, 0.0), estimate_distribution(triple(b), g, 3.0));
    CHECK(once == doctest::Approx(thrice).epsilon(1e-12));
}
