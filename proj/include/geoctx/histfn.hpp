#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace geoctx {

/// Strictly increasing positive radii in meters.
class RadiiSet {
public:
    RadiiSet() = default;
    explicit RadiiSet(std::vector<double> radii);

    /// {1000, 2000, ..., 10000}
    static RadiiSet standard();

    std::span<const double> values() const { return radii_; }
    std::size_t size() const { return radii_.size(); }
    double min() const { return radii_.front(); }
    double max() const { return radii_.back(); }
    double operator[](std::size_t i) const { return radii_[i]; }

    bool operator==(const RadiiSet &) const = default;

private:
    std::vector<double> radii_;
};

// Piecewise-linear interpolation over shared knots. Below the first knot and
// above the last the function is flat.
double pwl_eval(std::span<const double> knots, std::span<const double> values, double rho);

// Slope of the segment containing rho. Interior knots take the right
// segment's slope, the last knot takes the last segment's slope, and points
// strictly outside the knot range have slope 0.
double pwl_deriv(std::span<const double> knots, std::span<const double> values, double rho);

class PiecewiseLinearFn {
public:
    PiecewiseLinearFn(std::vector<double> knots, std::vector<double> values);

    double eval(double rho) const { return pwl_eval(knots_, values_, rho); }
    double deriv(double rho) const { return pwl_deriv(knots_, values_, rho); }

    std::span<const double> knots() const { return knots_; }
    std::span<const double> values() const { return values_; }

private:
    std::vector<double> knots_;
    std::vector<double> values_;
};

PiecewiseLinearFn fit(std::span<const double> values_over_radii, const RadiiSet &radii);

/// Histogram functions for one record, all sharing the radius knots.
/// Function f has values row f of a (fn_count x |R|) matrix. For a context
/// feature over K keys the functions are ordered block-major: across-key
/// normalized keys 0..K-1, then within-key normalized keys 0..K-1.
class HistFnBank {
public:
    HistFnBank() = default;
    HistFnBank(RadiiSet radii, std::size_t fn_count, std::vector<double> values);

    /// Regroups a radius-major context feature (|R| x 2 x K) into 2K functions.
    static HistFnBank from_context_feature(std::span<const double> feature, const RadiiSet &radii,
                                           std::size_t key_count);

    const RadiiSet &radii() const { return radii_; }
    std::size_t fn_count() const { return fn_count_; }
    std::span<const double> values(std::size_t fn) const;
    std::span<const double> all_values() const { return values_; }

    double eval(std::size_t fn, double rho) const { return pwl_eval(radii_.values(), values(fn), rho); }
    double deriv(std::size_t fn, double rho) const {
        return pwl_deriv(radii_.values(), values(fn), rho);
    }

    /// Appends the functions of another bank with identical knots.
    void append(const HistFnBank &other);

private:
    RadiiSet radii_;
    std::size_t fn_count_ = 0;
    std::vector<double> values_;
};

}  // namespace geoctx
