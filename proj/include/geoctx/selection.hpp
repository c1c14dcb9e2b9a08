#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "geoctx/geodata.hpp"

namespace geoctx {

/// Discrete distribution over grid cells. Cells absent from `probs` carry
/// `background` mass each, which keeps smoothed distributions sparse.
struct GeoDistribution {
    GridSpec grid;
    std::map<std::uint64_t, double> probs;
    double background = 0.0;

    double prob(std::uint64_t cell) const;
    /// Total mass, accounting for background cells.
    double total() const;
};

/// prob(cell) = (count + alpha) / (N + alpha * cells). Points outside the
/// grid box are skipped.
GeoDistribution estimate_distribution(std::span<const GeoPoint> points, const GridSpec &grid,
                                      double alpha);

/// D_KL(P || Q) in nats. Throws SupportError if P has mass where Q has none.
double kl_divergence(const GeoDistribution &p, const GeoDistribution &q);

struct ClassDivergence {
    int cls = 0;
    double kl = 0.0;
};

/// Classes sorted by descending D_KL(P || Q_c), ties by class id. Returns at
/// most `top_n` entries; when `threshold` is set only classes with
/// divergence >= threshold are kept.
std::vector<ClassDivergence> select_classes(const GeoDistribution &p,
                                            const std::map<int, GeoDistribution> &q_by_class,
                                            std::size_t top_n,
                                            std::optional<double> threshold = std::nullopt);

}  // namespace geoctx
