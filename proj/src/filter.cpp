#include "mfgpi/filter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfgpi/errors.hpp"

namespace mfgpi {

PriorMeasure PriorMeasure::from_atoms(std::vector<PriorAtom> atoms) {
    PriorMeasure p;
    p.atoms = std::move(atoms);
    if (p.atoms.empty()) throw InputError("prior: at least one atom is required");
    p.theta_min = p.atoms.front().theta;
    p.theta_max = p.atoms.front().theta;
    for (const auto& a : p.atoms) {
        p.theta_min = std::min(p.theta_min, a.theta);
        p.theta_max = std::max(p.theta_max, a.theta);
    }
    p.validate();
    return p;
}

PriorMeasure PriorMeasure::dirac(double theta) { return from_atoms({{theta, 1.0}}); }

void PriorMeasure::validate() const {
    if (atoms.empty()) throw InputError("prior: at least one atom is required");
    if (!(theta_min > 0.0) || !(theta_min <= theta_max) || !std::isfinite(theta_max))
        throw InputError("prior: need 0 < theta_min <= theta_max < inf");
    long double total = 0.0L;
    for (const auto& a : atoms) {
        if (!std::isfinite(a.theta) || !std::isfinite(a.weight) || !(a.weight > 0.0))
            throw InputError("prior: atom weights must be positive and finite");
        if (a.theta < theta_min || a.theta > theta_max) {
            std::ostringstream os;
            os << "prior: atom theta=" << a.theta << " outside [" << theta_min << ", " << theta_max << "]";
            throw InputError(os.str());
        }
        total += a.weight;
    }
    if (std::abs(static_cast<double>(total) - 1.0) > 1e-12) {
        std::ostringstream os;
        os.precision(17);
        os << "prior: weights sum to " << static_cast<double>(total) << ", expected 1";
        throw InputError(os.str());
    }
}

namespace {

void check_args(double y, double t) {
    if (!std::isfinite(y)) throw InputError("filter: y must be finite");
    if (!std::isfinite(t) || t < 0.0) throw InputError("filter: t must be finite and non-negative");
}

// Exponents e_i = ln w_i + y theta_i - theta_i^2 t / 2 and their maximum.
double max_exponent(const PriorMeasure& p, double y, double t) {
    double m = -INFINITY;
    for (const auto& a : p.atoms) m = std::max(m, std::log(a.weight) + y * a.theta - 0.5 * a.theta * a.theta * t);
    return m;
}

}  // namespace

double eval_log_F(const PriorMeasure& prior, double y, double t) {
    check_args(y, t);
    const double m = max_exponent(prior, y, t);
    double s = 0.0;
    for (const auto& a : prior.atoms)
        s += std::exp(std::log(a.weight) + y * a.theta - 0.5 * a.theta * a.theta * t - m);
    return m + std::log(s);
}

double eval_F(const PriorMeasure& prior, double y, double t) {
    const double v = std::exp(eval_log_F(prior, y, t));
    if (!std::isfinite(v) || !(v > 0.0)) {
        std::ostringstream os;
        os << "filter: F(" << y << ", " << t << ") not representable";
        throw RangeError(os.str());
    }
    return v;
}

double eval_F_y(const PriorMeasure& prior, double y, double t) {
    return eval_b(prior, y, t) * eval_F(prior, y, t);
}

double eval_b(const PriorMeasure& prior, double y, double t) {
    check_args(y, t);
    const double m = max_exponent(prior, y, t);
    double num = 0.0;
    double den = 0.0;
    double lo = prior.atoms.front().theta;
    double hi = lo;
    for (const auto& a : prior.atoms) {
        const double e = std::exp(std::log(a.weight) + y * a.theta - 0.5 * a.theta * a.theta * t - m);
        num += a.theta * e;
        den += e;
        lo = std::min(lo, a.theta);
        hi = std::max(hi, a.theta);
    }
    return std::clamp(num / den, lo, hi);
}

FilterSurface build_filter_surface(const PriorMeasure& prior, const SpaceTimeGrid& grid) {
    prior.validate();
    grid.validate();
    FilterSurface fs{grid, FieldSurface(grid), FieldSurface(grid), FieldSurface(grid)};
    for (std::size_t n = 0; n < grid.nt; ++n) {
        const double t = grid.t(n);
        for (std::size_t i = 0; i < grid.ny; ++i) {
            const double y = grid.y(i);
            const double F = eval_F(prior, y, t);
            const double b = eval_b(prior, y, t);
            fs.F(i, n) = F;
            fs.b(i, n) = b;
            fs.F_y(i, n) = b * F;
        }
    }
    const double th1 = prior.theta_min;
    const double th2 = prior.theta_max;
    double amin = prior.atoms.front().theta;
    double amax = amin;
    for (const auto& a : prior.atoms) {
        amin = std::min(amin, a.theta);
        amax = std::max(amax, a.theta);
    }
    const double slope_cap = th2 * th2 - th1 * th1 + 1e-9;
    const double dy = grid.dy();
    auto fail = [&](const char* what, std::size_t i, std::size_t n) {
        std::ostringstream os;
        os << "filter surface: " << what << " at y=" << grid.y(i) << ", t=" << grid.t(n);
        throw ConsistencyError(os.str());
    };
    for (std::size_t n = 0; n < grid.nt; ++n) {
        for (std::size_t i = 0; i < grid.ny; ++i) {
            const double b = fs.b(i, n);
            if (!(fs.F(i, n) > 0.0) || !std::isfinite(fs.F(i, n))) fail("F not positive", i, n);
            if (b < th1 || b > th2) fail("b outside [theta_min, theta_max]", i, n);
            if (i == 0) continue;
            const double prev = fs.b(i - 1, n);
            if (b < prev) fail("b decreasing in y", i, n);
            const bool saturated = prev - amin < 1e-12 || amax - b < 1e-12;
            if (amax > amin && !saturated && !(b > prev)) fail("b not strictly increasing in y", i, n);
            if ((b - prev) / dy > slope_cap) fail("b slope above theta_max^2 - theta_min^2", i, n);
        }
    }
    return fs;
}

}  // namespace mfgpi
