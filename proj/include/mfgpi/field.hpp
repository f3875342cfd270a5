#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mfgpi {

// Uniform (y,t) lattice on [y_lo, y_hi] x [0, T].
struct SpaceTimeGrid {
    double y_lo = -6.0;
    double y_hi = 6.0;
    std::size_t ny = 481;
    double T = 1.0;
    std::size_t nt = 401;

    double dy() const { return (y_hi - y_lo) / static_cast<double>(ny - 1); }
    double dt() const { return T / static_cast<double>(nt - 1); }
    double y(std::size_t i) const { return y_lo + dy() * static_cast<double>(i); }
    double t(std::size_t n) const { return dt() * static_cast<double>(n); }

    void validate() const;
    // Same ranges with spacing divided by `factor` in both directions.
    SpaceTimeGrid refined(std::size_t factor) const;
    std::string describe() const;
};

// Uniform parameter axis (z for h-families, m-bar for g/f families).
struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t n = 2;

    double step() const { return (hi - lo) / static_cast<double>(n - 1); }
    double at(std::size_t k) const { return lo + step() * static_cast<double>(k); }
    void validate(const char* name) const;
};

// Lagrange weights for a query on a uniform axis; cubic when n >= 4.
struct Stencil {
    std::size_t first = 0;
    int count = 0;
    double w[4] = {0.0, 0.0, 0.0, 0.0};
};

Stencil cubic_stencil(double lo, double step, std::size_t n, double x, const char* axis_name);
Stencil linear_stencil(double lo, double step, std::size_t n, double x, const char* axis_name);

// Scalar table over the (y,t) grid, optionally stacked along a parameter axis.
// Storage order is [param][t][y] so every (param, t) row is contiguous in y.
class FieldSurface {
public:
    FieldSurface() = default;
    explicit FieldSurface(const SpaceTimeGrid& grid, double fill = 0.0);
    FieldSurface(const SpaceTimeGrid& grid, const Axis& param, double fill = 0.0);

    const SpaceTimeGrid& grid() const { return grid_; }
    bool stacked() const { return stacked_; }
    const Axis& param() const { return param_; }
    std::size_t np() const { return stacked_ ? param_.n : 1; }
    bool empty() const { return values_.empty(); }

    double& operator()(std::size_t i, std::size_t n, std::size_t p = 0) {
        return values_[(p * grid_.nt + n) * grid_.ny + i];
    }
    double operator()(std::size_t i, std::size_t n, std::size_t p = 0) const {
        return values_[(p * grid_.nt + n) * grid_.ny + i];
    }
    double* row(std::size_t n, std::size_t p = 0) { return &values_[(p * grid_.nt + n) * grid_.ny]; }
    const double* row(std::size_t n, std::size_t p = 0) const {
        return &values_[(p * grid_.nt + n) * grid_.ny];
    }
    const std::vector<double>& values() const { return values_; }

    // Piecewise cubic in y (and in the parameter), linear in t. Exact at nodes.
    double eval(double y, double t) const;
    double eval(double y, double t, double param) const;
    // As eval, but cubic Hermite in the parameter using d_param, the parameter
    // derivative on the same grid. The result is C1 in the parameter.
    double eval_hermite(double y, double t, double param, const FieldSurface& d_param) const;

    bool all_finite() const;

private:
    SpaceTimeGrid grid_{};
    Axis param_{};
    bool stacked_ = false;
    std::vector<double> values_;
};

// Central finite differences of order 2 or 4 at every node; second order
// (one-sided at the ends) where the wider stencil does not fit.
FieldSurface diff_y(const FieldSurface& f, int order = 2);
FieldSurface diff_param(const FieldSurface& f, int order = 2);

}  // namespace mfgpi
