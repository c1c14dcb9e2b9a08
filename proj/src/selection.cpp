#include "geoctx/selection.hpp"

#include <algorithm>
#include <cmath>

#include "geoctx/error.hpp"

namespace geoctx {

double GeoDistribution::prob(std::uint64_t cell) const {
    auto it = probs.find(cell);
    return it == probs.end() ? background : it->second;
}

double GeoDistribution::total() const {
    double sum = 0.0;
    for (const auto &[cell, p] : probs) sum += p;
    return sum + background * static_cast<double>(grid.cell_count() - probs.size());
}

GeoDistribution estimate_distribution(std::span<const GeoPoint> points, const GridSpec &grid,
                                      double alpha) {
    if (!(alpha >= 0.0)) throw InvalidArgument("smoothing must be non-negative");
    std::map<std::uint64_t, double> counts;
    std::size_t n = 0;
    for (const GeoPoint &p : points) {
        if (!grid.bbox.contains(p)) continue;
        counts[quantize(p, grid).flat] += 1.0;
        ++n;
    }
    if (n == 0 && alpha == 0.0) {
        throw InvalidArgument("cannot estimate a distribution from no points without smoothing");
    }
    const double denom = static_cast<double>(n) + alpha * static_cast<double>(grid.cell_count());
    GeoDistribution d;
    d.grid = grid;
    d.background = alpha / denom;
    for (const auto &[cell, c] : counts) d.probs[cell] = (c + alpha) / denom;
    return d;
}

namespace {

double kl_term(double p, double q) {
    if (p == 0.0) return 0.0;
    if (q == 0.0) {
        throw SupportError("Q has zero mass where P is positive; smooth Q with alpha > 0");
    }
    return p * std::log(p / q);
}

}  // namespace

double kl_divergence(const GeoDistribution &p, const GeoDistribution &q) {
    if (!(p.grid == q.grid)) throw ShapeError("distributions are on different grids");
    double sum = 0.0;
    std::uint64_t explicit_cells = 0;
    auto ip = p.probs.begin();
    auto iq = q.probs.begin();
    while (ip != p.probs.end() || iq != q.probs.end()) {
        if (iq == q.probs.end() || (ip != p.probs.end() && ip->first < iq->first)) {
            sum += kl_term(ip->second, q.background);
            ++ip;
        } else if (ip == p.probs.end() || iq->first < ip->first) {
            sum += kl_term(p.background, iq->second);
            ++iq;
        } else {
            sum += kl_term(ip->second, iq->second);
            ++ip;
            ++iq;
        }
        ++explicit_cells;
    }
    const std::uint64_t rest = p.grid.cell_count() - explicit_cells;
    if (rest > 0) sum += static_cast<double>(rest) * kl_term(p.background, q.background);
    return sum;
}

std::vector<ClassDivergence> select_classes(const GeoDistribution &p,
                                            const std::map<int, GeoDistribution> &q_by_class,
                                            std::size_t top_n, std::optional<double> threshold) {
    std::vector<ClassDivergence> out;
    for (const auto &[cls, q] : q_by_class) {
        try {
            out.push_back({cls, kl_divergence(p, q)});
        } catch (const Error &e) {
            throw SupportError("class " + std::to_string(cls) + ": " + e.what());
        }
    }
    std::sort(out.begin(), out.end(), [](const ClassDivergence &a, const ClassDivergence &b) {
        if (a.kl != b.kl) return a.kl > b.kl;
        return a.cls < b.cls;
    });
    if (threshold) {
        std::erase_if(out, [&](const ClassDivergence &d) { return d.kl < *threshold; });
    }
    if (out.size() > top_n) out.resize(top_n);
    return out;
}

}  // namespace geoctx
