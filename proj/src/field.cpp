#include "mfgpi/field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfgpi/errors.hpp"

namespace mfgpi {

namespace {

constexpr double kSnap = 1e-10;

void check_range(double lo, double hi, double x, const char* axis_name) {
    const double slack = 1e-12 * (hi - lo);
    if (!(x >= lo - slack && x <= hi + slack)) {
        std::ostringstream os;
        os << axis_name << " query " << x << " outside [" << lo << ", " << hi << "]";
        throw RangeError(os.str());
    }
}

}  // namespace

void SpaceTimeGrid::validate() const {
    if (!std::isfinite(y_lo) || !std::isfinite(y_hi) || !(y_lo < y_hi))
        throw InputError("grid: need finite y_lo < y_hi");
    if (ny < 2 || nt < 2) throw InputError("grid: ny and nt must be at least 2");
    if (!std::isfinite(T) || !(T > 0.0)) throw InputError("grid: horizon T must be positive");
}

SpaceTimeGrid SpaceTimeGrid::refined(std::size_t factor) const {
    SpaceTimeGrid g = *this;
    g.ny = (ny - 1) * factor + 1;
    g.nt = (nt - 1) * factor + 1;
    return g;
}

std::string SpaceTimeGrid::describe() const {
    std::ostringstream os;
    os << ny << "x" << nt << " y[" << y_lo << "," << y_hi << "] T=" << T;
    return os.str();
}

void Axis::validate(const char* name) const {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi) || n < 2) {
        std::ostringstream os;
        os << name << " axis: need finite lo < hi and at least 2 nodes";
        throw InputError(os.str());
    }
}

Stencil cubic_stencil(double lo, double step, std::size_t n, double x, const char* axis_name) {
    const double hi = lo + step * static_cast<double>(n - 1);
    check_range(lo, hi, x, axis_name);
    Stencil st;
    double s = (x - lo) / step;
    const double r = std::round(s);
    if (std::abs(s - r) <= kSnap) {
        st.first = static_cast<std::size_t>(std::min(std::max(r, 0.0), static_cast<double>(n - 1)));
        st.count = 1;
        st.w[0] = 1.0;
        return st;
    }
    s = std::min(std::max(s, 0.0), static_cast<double>(n - 1));
    if (n < 4) return linear_stencil(lo, step, n, x, axis_name);
    auto j = static_cast<long>(std::floor(s));
    long first = std::min(std::max(j - 1, 0L), static_cast<long>(n) - 4);
    const double u = s - static_cast<double>(first);
    st.first = static_cast<std::size_t>(first);
    st.count = 4;
    st.w[0] = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    st.w[1] = u * (u - 2.0) * (u - 3.0) / 2.0;
    st.w[2] = -u * (u - 1.0) * (u - 3.0) / 2.0;
    st.w[3] = u * (u - 1.0) * (u - 2.0) / 6.0;
    return st;
}

Stencil linear_stencil(double lo, double step, std::size_t n, double x, const char* axis_name) {
    const double hi = lo + step * static_cast<double>(n - 1);
    check_range(lo, hi, x, axis_name);
    Stencil st;
    double s = (x - lo) / step;
    const double r = std::round(s);
    if (std::abs(s - r) <= kSnap) {
        st.first = static_cast<std::size_t>(std::min(std::max(r, 0.0), static_cast<double>(n - 1)));
        st.count = 1;
        st.w[0] = 1.0;
        return st;
    }
    s = std::min(std::max(s, 0.0), static_cast<double>(n - 1));
    auto j = std::min(static_cast<std::size_t>(std::floor(s)), n - 2);
    const double u = s - static_cast<double>(j);
    st.first = j;
    st.count = 2;
    st.w[0] = 1.0 - u;
    st.w[1] = u;
    return st;
}

FieldSurface::FieldSurface(const SpaceTimeGrid& grid, double fill)
    : grid_(grid), values_(grid.ny * grid.nt, fill) {
    grid_.validate();
}

FieldSurface::FieldSurface(const SpaceTimeGrid& grid, const Axis& param, double fill)
    : grid_(grid), param_(param), stacked_(true), values_(grid.ny * grid.nt * param.n, fill) {
    grid_.validate();
    param_.validate("parameter");
}

double FieldSurface::eval(double y, double t) const {
    const Stencil sy = cubic_stencil(grid_.y_lo, grid_.dy(), grid_.ny, y, "y");
    const Stencil st = linear_stencil(0.0, grid_.dt(), grid_.nt, t, "t");
    double acc = 0.0;
    for (int a = 0; a < st.count; ++a) {
        const double* r = row(st.first + a);
        double v = 0.0;
        for (int b = 0; b < sy.count; ++b) v += sy.w[b] * r[sy.first + b];
        acc += st.w[a] * v;
    }
    return acc;
}

double FieldSurface::eval(double y, double t, double param) const {
    if (!stacked_) return eval(y, t);
    const Stencil sy = cubic_stencil(grid_.y_lo, grid_.dy(), grid_.ny, y, "y");
    const Stencil st = linear_stencil(0.0, grid_.dt(), grid_.nt, t, "t");
    const Stencil sp = cubic_stencil(param_.lo, param_.step(), param_.n, param, "parameter");
    double acc = 0.0;
    for (int c = 0; c < sp.count; ++c) {
        double vp = 0.0;
        for (int a = 0; a < st.count; ++a) {
            const double* r = row(st.first + a, sp.first + c);
            double v = 0.0;
            for (int b = 0; b < sy.count; ++b) v += sy.w[b] * r[sy.first + b];
            vp += st.w[a] * v;
        }
        acc += sp.w[c] * vp;
    }
    return acc;
}

double FieldSurface::eval_hermite(double y, double t, double param, const FieldSurface& d_param) const {
    if (!stacked_) return eval(y, t);
    const double step = param_.step();
    const double hi = param_.lo + step * static_cast<double>(param_.n - 1);
    if (!(param >= param_.lo - 1e-12 * step && param <= hi + 1e-12 * step)) return eval(y, t, param);
    const double s = std::min(std::max((param - param_.lo) / step, 0.0), static_cast<double>(param_.n - 1));
    const auto k = std::min(static_cast<std::size_t>(s), param_.n - 2);
    const double u = s - static_cast<double>(k);
    const double z0 = param_.at(k), z1 = param_.at(k + 1);
    const double v0 = eval(y, t, z0), v1 = eval(y, t, z1);
    const double d0 = d_param.eval(y, t, z0) * step, d1 = d_param.eval(y, t, z1) * step;
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * v0 + (u3 - 2 * u2 + u) * d0 + (3 * u2 - 2 * u3) * v1 + (u3 - u2) * d1;
}

bool FieldSurface::all_finite() const {
    for (double v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

namespace {

// Derivative along one line of m samples spaced h apart; v and d are strided.
// Central differences of the requested order inside, second order near the ends.
void diff_line(const double* v, double* d, std::size_t m, std::size_t stride, double h, int order) {
    auto at = [&](std::size_t k) { return v[k * stride]; };
    auto put = [&](std::size_t k, double x) { d[k * stride] = x; };
    if (m == 2) {
        put(0, (at(1) - at(0)) / h);
        put(1, (at(1) - at(0)) / h);
        return;
    }
    put(0, (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h));
    put(m - 1, (3.0 * at(m - 1) - 4.0 * at(m - 2) + at(m - 3)) / (2.0 * h));
    for (std::size_t k = 1; k + 1 < m; ++k) {
        if (order >= 4 && k >= 2 && k + 2 < m)
            put(k, (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * h));
        else
            put(k, (at(k + 1) - at(k - 1)) / (2.0 * h));
    }
}

void check_order(int order) {
    if (order != 2 && order != 4) throw InputError("finite differences: order must be 2 or 4");
}

}  // namespace

FieldSurface diff_y(const FieldSurface& f, int order) {
    check_order(order);
    const auto& g = f.grid();
    FieldSurface out = f;
    for (std::size_t p = 0; p < f.np(); ++p)
        for (std::size_t n = 0; n < g.nt; ++n) diff_line(f.row(n, p), out.row(n, p), g.ny, 1, g.dy(), order);
    return out;
}

FieldSurface diff_param(const FieldSurface& f, int order) {
    check_order(order);
    if (!f.stacked()) throw InputError("diff_param: field has no parameter axis");
    const auto& g = f.grid();
    FieldSurface out = f;
    const std::size_t stride = g.nt * g.ny;
    for (std::size_t n = 0; n < g.nt; ++n)
        for (std::size_t i = 0; i < g.ny; ++i)
            diff_line(f.row(n, 0) + i, out.row(n, 0) + i, f.np(), stride, f.param().step(), order);
    return out;
}

}  // namespace mfgpi
