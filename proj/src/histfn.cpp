#include "geoctx/histfn.hpp"

#include <algorithm>
#include <cmath>

#include "geoctx/error.hpp"

namespace geoctx {

RadiiSet::RadiiSet(std::vector<double> radii) : radii_(std::move(radii)) {
    if (radii_.empty()) throw InvalidArgument("radius set is empty");
    for (std::size_t i = 0; i < radii_.size(); ++i) {
        if (!(radii_[i] > 0.0) || !std::isfinite(radii_[i])) {
            throw InvalidArgument("radii must be finite and positive");
        }
        if (i > 0 && !(radii_[i] > radii_[i - 1])) {
            throw InvalidArgument("radii must be strictly increasing");
        }
    }
}

RadiiSet RadiiSet::standard() {
    std::vector<double> r;
    for (int i = 1; i <= 10; ++i) r.push_back(1000.0 * i);
    return RadiiSet(std::move(r));
}

namespace {

// Index of the segment [k[i], k[i+1]] used for rho inside the knot range.
std::size_t segment_of(std::span<const double> knots, double rho) {
    auto it = std::upper_bound(knots.begin(), knots.end(), rho);
    auto i = static_cast<std::size_t>(it - knots.begin());
    // i is the first knot > rho, so the segment starts at i-1; rho equal to
    // the last knot stays on the last segment.
    return std::min(i - 1, knots.size() - 2);
}

}  // namespace

double pwl_eval(std::span<const double> knots, std::span<const double> values, double rho) {
    if (rho <= knots.front()) return values.front();
    if (rho >= knots.back()) return values.back();
    const std::size_t i = segment_of(knots, rho);
    const double t = (rho - knots[i]) / (knots[i + 1] - knots[i]);
    return values[i] + t * (values[i + 1] - values[i]);
}

double pwl_deriv(std::span<const double> knots, std::span<const double> values, double rho) {
    if (rho < knots.front() || rho > knots.back()) return 0.0;
    const std::size_t i = segment_of(knots, rho);
    return (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]);
}

PiecewiseLinearFn::PiecewiseLinearFn(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
    if (knots_.size() != values_.size()) throw ShapeError("knot and value counts differ");
    if (knots_.size() < 2) throw InvalidArgument("a histogram function needs at least two knots");
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        if (!(knots_[i] > knots_[i - 1])) throw InvalidArgument("knots must be strictly increasing");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) throw InvalidArgument("histogram values must be finite");
    }
}

PiecewiseLinearFn fit(std::span<const double> values_over_radii, const RadiiSet &radii) {
    if (values_over_radii.size() != radii.size()) {
        throw ShapeError("fit: expected " + std::to_string(radii.size()) + " values, got " +
                         std::to_string(values_over_radii.size()));
    }
    return PiecewiseLinearFn({radii.values().begin(), radii.values().end()},
                             {values_over_radii.begin(), values_over_radii.end()});
}

HistFnBank::HistFnBank(RadiiSet radii, std::size_t fn_count, std::vector<double> values)
    : radii_(std::move(radii)), fn_count_(fn_count), values_(std::move(values)) {
    if (radii_.size() < 2) throw InvalidArgument("a histogram bank needs at least two radii");
    if (values_.size() != fn_count_ * radii_.size()) throw ShapeError("histogram bank size mismatch");
}

HistFnBank HistFnBank::from_context_feature(std::span<const double> feature, const RadiiSet &radii,
                                            std::size_t key_count) {
    const std::size_t nr = radii.size();
    if (feature.size() != 2 * key_count * nr) {
        throw ShapeError("context feature has " + std::to_string(feature.size()) +
                         " entries, expected " + std::to_string(2 * key_count * nr));
    }
    const std::size_t fns = 2 * key_count;
    std::vector<double> values(fns * nr);
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t f = 0; f < fns; ++f) values[f * nr + r] = feature[r * fns + f];
    }
    return HistFnBank(radii, fns, std::move(values));
}

std::span<const double> HistFnBank::values(std::size_t fn) const {
    return std::span<const double>(values_).subspan(fn * radii_.size(), radii_.size());
}

void HistFnBank::append(const HistFnBank &other) {
    if (fn_count_ == 0 && values_.empty()) {
        *this = other;
        return;
    }
    if (!(radii_ == other.radii_)) throw ShapeError("histogram banks use different radii");
    values_.insert(values_.end(), other.values_.begin(), other.values_.end());
    fn_count_ += other.fn_count_;
}

}  // namespace geoctx
