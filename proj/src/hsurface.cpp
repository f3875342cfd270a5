#include "mfgpi/hsurface.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfgpi/errors.hpp"
#include "mfgpi/invert.hpp"

namespace mfgpi {

namespace {

// z range for the exponential-sum route, kept well inside double range.
constexpr double kZMax = 40.0;
constexpr double kIneqTol = 1e-6;

std::size_t halve(std::size_t n) { return (n - 1) % 2 == 0 ? (n - 1) / 2 + 1 : n; }

std::string node_text(double z, double y, double t) {
    std::ostringstream os;
    os << "z=" << z << " y=" << y << " t=" << t;
    return os.str();
}

HInequalityReport check_h_inequalities(const HSurface& s) {
    HInequalityReport rep;
    rep.heat1_min_h_z = INFINITY;
    rep.heat1_min_h_y = INFINITY;
    rep.heat2_max_excess = -INFINITY;
    rep.heat3_max_excess = -INFINITY;
    const auto& g = s.hgrid.grid;
    const auto& z = s.hgrid.z;
    const YWindow mid = interior_third(g);
    const FieldSurface h_yz = diff_param(s.h_y, 4);
    const double A = s.bound_A();
    const double B = s.constants.B;
    const double th2 = s.market->prior.theta_max;
    double worst = -INFINITY;
    for (std::size_t p = 2; p + 2 < z.n; ++p) {
        for (std::size_t n = 0; n < g.nt; ++n) {
            const double t = g.t(n);
            for (std::size_t i = 0; i < g.ny; ++i) {
                const double y = g.y(i);
                if (y < mid.lo || y > mid.hi) continue;
                const double hv = s.h(i, n, p), hz = s.h_z(i, n, p), hy = s.h_y(i, n, p);
                const double tol_h = kIneqTol * (1.0 + std::abs(hv));
                const double tol_z = kIneqTol * (1.0 + std::abs(hz));
                rep.heat1_min_h_z = std::min(rep.heat1_min_h_z, hz);
                rep.heat1_min_h_y = std::min(rep.heat1_min_h_y, hy);
                const double e2 = (hy - th2 * std::sqrt(A * hv * hv + B * std::exp(A * (g.T - t)))) / (1.0 + std::abs(hv));
                const double e3 = (std::abs(h_yz(i, n, p)) - A * hz) / (1.0 + std::abs(hz));
                rep.heat2_max_excess = std::max(rep.heat2_max_excess, e2);
                rep.heat3_max_excess = std::max(rep.heat3_max_excess, e3);
                ++rep.nodes;
                double bad = -INFINITY;
                const char* which = nullptr;
                if (hz <= -tol_z) bad = -hz, which = "h_z > 0";
                if (hy <= -tol_h && -hy > bad) bad = -hy, which = "h_y > 0";
                if (e2 > kIneqTol && e2 > bad) bad = e2, which = "h_y <= theta_max sqrt(A h^2 + B e^{A(T-t)})";
                if (e3 > kIneqTol && e3 > bad) bad = e3, which = "|h_yz| <= A h_z";
                if (which && bad > worst) {
                    worst = bad;
                    rep.ok = false;
                    rep.worst = std::string(which) + " at " + node_text(z.at(p), y, t);
                }
            }
        }
    }
    return rep;
}

}  // namespace

HGrid default_h_grid(const SpaceTimeGrid& market_grid) {
    HGrid hg;
    hg.grid = market_grid;
    hg.grid.ny = halve(market_grid.ny);
    hg.grid.nt = halve(market_grid.nt);
    const double dy = hg.grid.dy();
    const auto nz = static_cast<std::size_t>(std::llround(16.0 / dy)) + 1;
    hg.z = Axis{-8.0, 8.0, std::max<std::size_t>(nz, 5)};
    return hg;
}

double HSurface::h_value(double z, double y, double t) const { return h.eval_hermite(y, t, z, h_z); }

std::pair<double, double> HSurface::h_wealth_window(double y, double t) const {
    return {h.eval(y, t, hgrid.z.lo), h.eval(y, t, hgrid.z.hi)};
}

double HSurface::h_inverse(double x, double y, double t) const {
    const auto [lo, hi] = h_wealth_window(y, t);
    if (!(x >= lo && x <= hi)) {
        std::ostringstream os;
        os << "h inverse: wealth " << x << " outside attainable window [" << lo << ", " << hi << "] at y=" << y
           << ", t=" << t;
        throw RangeError(os.str());
    }
    return monotone_invert([&](double z) { return h_value(z, y, t); }, x, hgrid.z.lo, hgrid.z.hi,
                           [&](double z) { return h_z.eval(y, t, z); });
}

double HSurface::H_composed(double z, double y, double t) const {
    return h_value(z - market->n.eval(y, t), y, t);
}

double HSurface::H_z_composed(double z, double y, double t) const {
    return h_z.eval(y, t, z - market->n.eval(y, t));
}

double HSurface::H_y_composed(double z, double y, double t) const {
    const double zz = z - market->n.eval(y, t);
    return h_y.eval(y, t, zz) - market->n_y.eval(y, t) * h_z.eval(y, t, zz);
}

double HSurface::H_inverse_composed(double x, double y, double t) const {
    return h_inverse(x, y, t) + market->n.eval(y, t);
}

std::pair<double, double> HSurface::z_window(double y, double t) const {
    switch (route) {
        case HRoute::Affine:
            return {-INFINITY, INFINITY};
        case HRoute::ExponentialSum:
            return {-kZMax, kZMax};
        case HRoute::Composition:
            break;
    }
    const double n = market->n.eval(y, t);
    return {hgrid.z.lo + n, hgrid.z.hi + n};
}

std::pair<double, double> HSurface::wealth_window(double y, double t) const {
    if (route == HRoute::Affine) return {-INFINITY, INFINITY};
    const auto [zl, zh] = z_window(y, t);
    return {H(zl, y, t), H(zh, y, t)};
}

double HSurface::H(double z, double y, double t) const {
    switch (route) {
        case HRoute::Affine:
            return affine_B * z;
        case HRoute::ExponentialSum: {
            if (std::abs(z) > kZMax) throw RangeError("H: z outside the exponential-sum window");
            double v = 0.0;
            for (const auto& term : terms) v += term.coef * std::exp(term.rho * z) * term.l.eval(y, t);
            return v;
        }
        case HRoute::Composition:
            break;
    }
    return H_composed(z, y, t);
}

double HSurface::H_z(double z, double y, double t) const {
    switch (route) {
        case HRoute::Affine:
            return affine_B;
        case HRoute::ExponentialSum: {
            if (std::abs(z) > kZMax) throw RangeError("H_z: z outside the exponential-sum window");
            double v = 0.0;
            for (const auto& term : terms)
                v += term.coef * term.rho * std::exp(term.rho * z) * term.l.eval(y, t);
            return v;
        }
        case HRoute::Composition:
            break;
    }
    return H_z_composed(z, y, t);
}

double HSurface::H_y(double z, double y, double t) const {
    switch (route) {
        case HRoute::Affine:
            return 0.0;
        case HRoute::ExponentialSum: {
            if (std::abs(z) > kZMax) throw RangeError("H_y: z outside the exponential-sum window");
            double v = 0.0;
            for (const auto& term : terms) v += term.coef * std::exp(term.rho * z) * term.l_y.eval(y, t);
            return v;
        }
        case HRoute::Composition:
            break;
    }
    return H_y_composed(z, y, t);
}

double sahara_inverse_quadratic(double x, double l1, double l2, double A, double B) {
    const double kappa = std::sqrt(B / A);
    const double root = std::hypot(x, kappa * std::sqrt(l1 * l2));
    // Two algebraically equal forms; pick the one free of cancellation.
    const double u = x >= 0.0 ? (x + root) / (kappa * l1) : kappa * l2 / (root - x);
    return std::log(u) / std::sqrt(A);
}

double HSurface::H_inverse(double x, double y, double t) const {
    if (!std::isfinite(x)) throw InputError("H inverse: wealth must be finite");
    if (route == HRoute::Affine) return x / affine_B;
    const auto [lo, hi] = wealth_window(y, t);
    if (!(x >= lo && x <= hi)) {
        std::ostringstream os;
        os << "H inverse: wealth " << x << " outside attainable window [" << lo << ", " << hi << "] at y=" << y
           << ", t=" << t;
        throw RangeError(os.str());
    }
    if (route == HRoute::Composition) return H_inverse_composed(x, y, t);
    if (const auto* s = std::get_if<Sahara>(&utility)) {
        double l1 = 0.0, l2 = 0.0;
        for (const auto& term : terms) (term.rho > 0 ? l1 : l2) = term.l.eval(y, t);
        return sahara_inverse_quadratic(x, l1, l2, s->A, s->B);
    }
    const auto [zl, zh] = z_window(y, t);
    return monotone_invert([&](double z) { return H(z, y, t); }, x, zl, zh,
                           [&](double z) { return H_z(z, y, t); });
}

double HSurface::alpha_at_z(double z, double y, double t) const {
    return market->c.eval(y, t) * H_z(z, y, t) + H_y(z, y, t);
}

double HSurface::alpha_tilde(double x, double y, double t) const {
    return h_y.eval(y, t, h_inverse(x, y, t));
}

double feedback_control(const HSurface& surface, double x, double y, double t) {
    return surface.alpha_at_z(surface.H_inverse(x, y, t), y, t);
}

HSurface build_h_surface(const UtilitySpec& utility, std::shared_ptr<const MarketModel> market, const HGrid& hgrid) {
    if (!market) throw InputError("h surface: market is required");
    validate_utility(utility);
    hgrid.grid.validate();
    hgrid.z.validate("z");
    HSurface s;
    s.utility = utility;
    s.market = market;
    s.constants = utility_constants(utility);
    s.hgrid = hgrid;
    s.route = HRoute::Composition;
    const auto& prior = market->prior;
    const double T = hgrid.grid.T;
    if (std::abs(T - market->grid().T) > 1e-12) throw InputError("h surface: horizon differs from the market grid");
    ParabolicProblem heat;
    s.h = solve_parabolic_family(
        heat, [&](double y, double z) { return terminal_H(utility, z + eval_log_F(prior, y, T)); }, hgrid.grid,
        hgrid.z);
    if (!s.h.all_finite()) throw NumericalError("h surface: non-finite values in the h stack");
    s.h_z = diff_param(s.h, 4);
    s.h_y = diff_y(s.h, 4);
    s.inequalities = check_h_inequalities(s);
    if (!s.inequalities.ok) throw ConsistencyError("h surface: " + s.inequalities.worst);
    return s;
}

HSurface build_h_surface(const UtilitySpec& utility, std::shared_ptr<const MarketModel> market) {
    const auto hg = default_h_grid(market->grid());
    return build_h_surface(utility, std::move(market), hg);
}

namespace {

ExpTerm solve_term(const MarketModel& m, double rho, double coef) {
    ParabolicProblem p;
    p.terminal = [](double) { return 1.0; };
    p.drift = [&m, rho](double y, double t) { return rho * m.c.eval(y, t); };
    p.reaction = [&m, rho](double y, double t) {
        const double c = m.c.eval(y, t);
        return 0.5 * rho * rho * c * c;
    };
    ExpTerm term;
    term.rho = rho;
    term.coef = coef;
    term.l = solve_terminal_parabolic(p, m.grid());
    term.l_y = diff_y(term.l, 4);
    return term;
}

}  // namespace

HSurface build_H_surface(const UtilitySpec& utility, std::shared_ptr<const MarketModel> market, const HGrid& hgrid) {
    HSurface s = build_h_surface(utility, market, hgrid);
    if (const auto* e = std::get_if<Exponential>(&utility)) {
        s.route = HRoute::Affine;
        s.affine_B = e->B;
    } else if (const auto* sa = std::get_if<Sahara>(&utility)) {
        s.route = HRoute::ExponentialSum;
        const double rho = std::sqrt(sa->A);
        const double kappa = std::sqrt(sa->B / sa->A);
        s.terms.push_back(solve_term(*market, rho, 0.5 * kappa));
        s.terms.push_back(solve_term(*market, -rho, -0.5 * kappa));
    } else if (const auto* c = std::get_if<Cmim>(&utility)) {
        s.route = HRoute::ExponentialSum;
        for (const auto& a : c->atoms) s.terms.push_back(solve_term(*market, a.rho, a.mu));
    }
    // Monotonicity of H in z on the market grid nodes of the interior third.
    const auto& g = market->grid();
    const YWindow mid = interior_third(g);
    for (std::size_t n = 0; n < g.nt; n += std::max<std::size_t>(1, g.nt / 20)) {
        for (std::size_t i = 0; i < g.ny; i += std::max<std::size_t>(1, g.ny / 40)) {
            const double y = g.y(i), t = g.t(n);
            if (y < mid.lo || y > mid.hi) continue;
            const auto [zl, zh] = s.route == HRoute::Composition ? s.z_window(y, t) : std::pair{-8.0, 8.0};
            for (int k = 0; k <= 32; ++k) {
                const double z = zl + (zh - zl) * k / 32.0;
                if (!(s.H_z(z, y, t) > 0.0)) {
                    std::ostringstream os;
                    os << "H surface: H_z <= 0 at " << node_text(z, y, t);
                    throw ConsistencyError(os.str());
                }
            }
        }
    }
    return s;
}

HSurface build_H_surface(const UtilitySpec& utility, std::shared_ptr<const MarketModel> market) {
    const auto hg = default_h_grid(market->grid());
    return build_H_surface(utility, std::move(market), hg);
}

double ValueSurface::w(double x, double y, double t) const {
    return K.eval(y, t, surface->h_inverse(x, y, t));
}

double ValueSurface::u(double x, double y, double t) const {
    return w(x, y, t) / eval_F(surface->market->prior, y, t);
}

ValueSurface build_value_surface(const HSurface& surface) {
    ValueSurface v;
    v.surface = &surface;
    const auto& prior = surface.market->prior;
    const double T = surface.hgrid.grid.T;
    ParabolicProblem heat;
    v.K = solve_parabolic_family(
        heat,
        [&](double y, double z) {
            const double x = terminal_H(surface.utility, z + eval_log_F(prior, y, T));
            return utility_J(surface.utility, x) * eval_F(prior, y, T);
        },
        surface.hgrid.grid, surface.hgrid.z);
    if (!v.K.all_finite()) throw NumericalError("value surface: non-finite values");
    return v;
}

}  // namespace mfgpi
