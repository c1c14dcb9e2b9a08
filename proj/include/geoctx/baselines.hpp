#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "geoctx/geodata.hpp"

namespace geoctx {

struct ClassDistribution {
    std::vector<double> probs;

    static ClassDistribution uniform(std::size_t classes);
    /// Throws unless entries are >= 0 and sum to 1 within 1e-9.
    void validate() const;
};

struct LabeledPoint {
    GeoPoint point;
    int label = 0;
};

inline constexpr double kDefaultPriorEpsilon = 1e-6;

/// Label histogram of the k nearest training points (haversine, ties by
/// training index), smoothed as (count_c + eps) / (k + eps * classes).
/// k larger than the training set uses every point and warns.
ClassDistribution knn_prior(std::span<const LabeledPoint> train, const GeoPoint &query, std::size_t k,
                            double epsilon, std::size_t classes);

/// Across-key normalized counts within r meters, smoothed as
/// (p_c + eps) / (1 + eps * classes); an empty neighborhood is uniform.
ClassDistribution radius_prior(const GeoPoint &point, const SpatialIndex &index, double r,
                               double epsilon);

/// score_c proportional to p_image(c) * prior(c) / p_class(c), renormalized.
std::vector<double> bayes_combine(const ClassDistribution &p_image, const ClassDistribution &prior,
                                  const ClassDistribution &p_class);

}  // namespace geoctx
