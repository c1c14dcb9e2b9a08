#include "geoctx/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "geoctx/error.hpp"

namespace geoctx {

ClassDistribution ClassDistribution::uniform(std::size_t classes) {
    if (classes == 0) throw InvalidArgument("class set is empty");
    return {std::vector<double>(classes, 1.0 / static_cast<double>(classes))};
}

void ClassDistribution::validate() const {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidArgument("distribution has a negative entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("distribution does not sum to 1");
}

ClassDistribution knn_prior(std::span<const LabeledPoint> train, const GeoPoint &query, std::size_t k,
                            double epsilon, std::size_t classes) {
    if (train.empty()) throw InvalidArgument("kNN prior needs training points");
    if (k < 1) throw InvalidArgument("k must be at least 1");
    if (classes == 0) throw InvalidArgument("class set is empty");
    if (!(epsilon >= 0.0)) throw InvalidArgument("smoothing must be non-negative");
    if (k > train.size()) {
        warn("kNN prior: k=" + std::to_string(k) + " exceeds the " + std::to_string(train.size()) +
             " training points; using all of them");
        k = train.size();
    }
    std::vector<std::pair<double, std::size_t>> dist(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        const int label = train[i].label;
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
            throw InvalidArgument("training label " + std::to_string(label) + " outside the class set");
        }
        dist[i] = {haversine_m(query, train[i].point), i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

    std::vector<double> counts(classes, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        counts[static_cast<std::size_t>(train[dist[i].second].label)] += 1.0;
    }
    const double denom = static_cast<double>(k) + epsilon * static_cast<double>(classes);
    for (double &c : counts) c = (c + epsilon) / denom;
    return {std::move(counts)};
}

ClassDistribution radius_prior(const GeoPoint &point, const SpatialIndex &index, double r,
                               double epsilon) {
    if (!(epsilon >= 0.0)) throw InvalidArgument("smoothing must be non-negative");
    const std::size_t classes = index.key_space();
    std::vector<double> counts = index.radius_aggregate(point, r);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (!(total > 0.0)) return ClassDistribution::uniform(classes);
    const double denom = 1.0 + epsilon * static_cast<double>(classes);
    for (double &c : counts) c = (c / total + epsilon) / denom;
    return {std::move(counts)};
}

std::vector<double> bayes_combine(const ClassDistribution &p_image, const ClassDistribution &prior,
                                  const ClassDistribution &p_class) {
    const std::size_t n = p_image.probs.size();
    if (prior.probs.size() != n || p_class.probs.size() != n) {
        throw ShapeError("Bayes combination needs distributions over the same classes");
    }
    std::vector<double> score(n);
    double sum = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        if (!(p_class.probs[c] > 0.0)) {
            throw InvalidArgument("class prior P(c) is zero for class " + std::to_string(c));
        }
        // prior/p_class first: a uniform prior then multiplies by exactly 1
        score[c] = p_image.probs[c] * (prior.probs[c] / p_class.probs[c]);
        sum += score[c];
    }
    if (!(sum > 0.0)) throw InvalidArgument("Bayes combination has no mass; use epsilon > 0");
    for (double &s : score) s /= sum;
    return score;
}

}  // namespace geoctx
