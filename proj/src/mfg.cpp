#include "mfgpi/mfg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfgpi/errors.hpp"
#include "mfgpi/invert.hpp"

namespace mfgpi {

namespace {

std::size_t halve(std::size_t n) { return (n - 1) % 2 == 0 ? (n - 1) / 2 + 1 : n; }

std::string node_text(double y, double mbar, double t) {
    std::ostringstream os;
    os << "(y=" << y << ", mbar=" << mbar << ", t=" << t << ")";
    return os.str();
}

// Simpson on [a, b]; exact for a cubic.
template <class F>
double simpson(const F& f, double a, double b) {
    return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
}

}  // namespace

GeneralMeanCoupling zero_coupling() {
    GeneralMeanCoupling c;
    c.name = "zero";
    c.C = [](double) { return 0.0; };
    c.C1 = [](double) { return 0.0; };
    c.k1 = 0.5;
    c.k2 = 1.5;
    return c;
}

GeneralMeanCoupling linear_mean_coupling(double theta) {
    if (!(theta > 0.0 && theta < 1.0)) throw InputError("linear coupling: theta must lie in (0,1)");
    GeneralMeanCoupling c;
    c.name = "linear";
    c.C = [theta](double z) { return theta * z; };
    c.C1 = [theta](double) { return theta; };
    c.k1 = 0.5 * (1.0 - theta);
    c.k2 = 1.0;
    return c;
}

GeneralMeanCoupling linear_plus_tanh(double a, double b, double k1, double k2) {
    GeneralMeanCoupling c;
    c.name = "linear_plus_tanh";
    c.C = [a, b](double z) { return a * z + b * std::tanh(z); };
    c.C1 = [a, b](double z) {
        const double s = 1.0 / std::cosh(z);
        return a + b * s * s;
    };
    c.k1 = k1;
    c.k2 = k2;
    return c;
}

void validate_coupling(const CouplingSpec& coupling) {
    if (const auto* l = std::get_if<LinearCoupling>(&coupling)) {
        if (!(l->theta > 0.0 && l->theta < 1.0)) {
            std::ostringstream os;
            os << "coupling: theta = " << l->theta << " must lie in (0,1)";
            throw InputError(os.str());
        }
        return;
    }
    const auto& g = std::get<GeneralMeanCoupling>(coupling);
    if (!g.C || !g.C1) throw InputError("coupling: C and C' must be supplied");
    if (!(g.k1 > 0.0 && g.k2 > g.k1)) throw InputError("coupling: need 0 < k1 < k2");
    if (!(g.K > 0.0 && g.L > 0.0)) throw InputError("coupling: growth constants K, L must be positive");
    if (std::abs(g.C(0.0)) > 1e-12) throw InputError("coupling: C(0) must be 0");
    for (int j = 0; j <= 4000; ++j) {
        const double z = -20.0 + 0.01 * j;
        const double s = 1.0 - g.C1(z);
        if (!(s > g.k1 && s < g.k2)) {
            std::ostringstream os;
            os << "coupling: 1 - C'(" << z << ") = " << s << " outside (k1, k2) = (" << g.k1 << ", " << g.k2 << ")";
            throw InputError(os.str());
        }
    }
}

GeneralMeanCoupling as_general_mean(const CouplingSpec& coupling) {
    validate_coupling(coupling);
    if (const auto* l = std::get_if<LinearCoupling>(&coupling)) return linear_mean_coupling(l->theta);
    return std::get<GeneralMeanCoupling>(coupling);
}

double coupling_value(const CouplingSpec& coupling, double mbar) {
    if (const auto* l = std::get_if<LinearCoupling>(&coupling)) return l->theta * mbar;
    return std::get<GeneralMeanCoupling>(coupling).C(mbar);
}

MfgGrid default_mfg_grid(const SpaceTimeGrid& market_grid) {
    MfgGrid g;
    g.grid = market_grid;
    g.grid.ny = halve(market_grid.ny);
    g.grid.nt = halve(market_grid.nt);
    return g;
}

double q_formula(const MarketModel& market, double y, double t) {
    const auto& mg = market.grid();
    const double h = mg.dy();
    const auto c_y0 = [&](double s) {
        return (market.c.eval(-2 * h, s) - 8 * market.c.eval(-h, s) + 8 * market.c.eval(h, s) -
                market.c.eval(2 * h, s)) /
               (12.0 * h);
    };
    // c is linear in t between nodes, so the trapezoid rule on nodes is exact for the table.
    double time_part = 0.0;
    const double dt = mg.dt();
    double s0 = 0.0, v0 = c_y0(0.0);
    while (s0 < t) {
        const double s1 = std::min(t, s0 + dt);
        const double v1 = c_y0(s1);
        time_part += 0.5 * (v0 + v1) * (s1 - s0);
        s0 = s1;
        v0 = v1;
    }
    // c is one cubic per y cell, so Simpson cell by cell is exact.
    const auto c_t = [&](double r) { return market.c.eval(r, t); };
    double space_part = 0.0;
    const double sign = y >= 0.0 ? 1.0 : -1.0;
    double a = 0.0;
    while (sign * (y - a) > 0.0) {
        const double b = sign > 0 ? std::min(y, a + h) : std::max(y, a - h);
        space_part += simpson(c_t, a, b);
        a = b;
    }
    return -0.5 * time_part + space_part;
}

FieldSurface build_q(const MarketModel& market, const SpaceTimeGrid& grid) {
    grid.validate();
    ParabolicProblem p;
    const double T = grid.T;
    p.terminal = [&](double y) { return q_formula(market, y, T); };
    return solve_terminal_parabolic(p, grid);
}

double MfgSolution::pi_star(double y, double mbar, double t) const {
    const double d = 1.0 - eval_f_m(y, mbar, t);
    if (!(d > 0.0)) {
        std::ostringstream os;
        os << "equilibrium degeneracy: 1 - f_m = " << d << " at " << node_text(y, mbar, t);
        throw NumericalError(os.str());
    }
    return (eval_f_y(y, mbar, t) + market->c.eval(y, t)) / d;
}

double MfgSolution::G(double y, double v, double t) const { return g.eval(y, t, v - q.eval(y, t)); }

FieldSurface build_g(const GeneralMeanCoupling& coupling, const MarketModel& market, const FieldSurface& q,
                     const SpaceTimeGrid& grid, const Axis& mbar, Axis& w_out) {
    (void)market;
    const std::size_t T = grid.nt - 1;
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < grid.ny; ++i) {
        const double qT = q(i, T);
        lo = std::min(lo, mbar.lo - coupling.C(mbar.lo) - qT);
        hi = std::max(hi, mbar.hi - coupling.C(mbar.hi) - qT);
    }
    const double pad = 0.1 * (hi - lo) + 1.0;
    const double dw = 0.5 * mbar.step();
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo + 2 * pad) / dw)) + 1;
    Axis w{lo - pad, lo - pad + dw * static_cast<double>(n - 1), n};
    const auto terminal = [&](double y, double v) {
        const double target = v + q.eval(y, grid.T);
        const double B = std::abs(target) / coupling.k1 + 1.0;
        try {
            return monotone_invert([&](double z) { return z - coupling.C(z); }, target, -B, B,
                                   [&](double z) { return 1.0 - coupling.C1(z); });
        } catch (const NumericalError& e) {
            std::ostringstream os;
            os << "coupling growth: cannot invert z - C(z) at " << target << " within [" << -B << ", " << B
               << "]; the bound (z - C(z))^{-1}(v) <= K e^{L v^2} with K=" << coupling.K << ", L=" << coupling.L
               << " gives " << coupling.K * std::exp(coupling.L * target * target) << " (" << e.what() << ")";
            throw RangeError(os.str());
        }
    };
    FieldSurface g = solve_parabolic_family(ParabolicProblem{}, terminal, grid, w);
    w_out = w;
    return g;
}

namespace {

double min_w_slope(const FieldSurface& g, std::string& where) {
    const auto& grid = g.grid();
    const Axis& w = g.param();
    double worst = INFINITY;
    for (std::size_t p = 0; p + 1 < w.n; ++p)
        for (std::size_t n = 0; n < grid.nt; ++n) {
            const double* a = g.row(n, p);
            const double* b = g.row(n, p + 1);
            for (std::size_t i = 0; i < grid.ny; ++i) {
                const double s = (b[i] - a[i]) / w.step();
                if (s < worst) {
                    worst = s;
                    where = node_text(grid.y(i), w.at(p), grid.t(n));
                }
            }
        }
    return worst;
}

// Solves g(y_i, w, t_n) = target on the w axis with the same cubic interpolant as FieldSurface::eval.
double invert_row(const FieldSurface& g, std::size_t i, std::size_t n, std::vector<double>& row, double target) {
    const Axis& w = g.param();
    const auto& grid = g.grid();
    if (row.front() > target || row.back() < target) {
        std::ostringstream os;
        os << "f inversion: mbar outside g range [" << row.front() << ", " << row.back() << "] at "
           << node_text(grid.y(i), target, grid.t(n));
        throw RangeError(os.str());
    }
    const auto it = std::upper_bound(row.begin(), row.end(), target);
    std::size_t p = static_cast<std::size_t>(it - row.begin());
    p = p == 0 ? 0 : std::min(p - 1, w.n - 2);
    if (row[p] == target) return w.at(p);
    if (row[p + 1] == target) return w.at(p + 1);
    const std::size_t first = std::min(p == 0 ? 0 : p - 1, w.n - 4);
    const double h = w.step();
    const double v0 = row[first], v1 = row[first + 1], v2 = row[first + 2], v3 = row[first + 3];
    const double x0 = w.at(first);
    const auto cubic = [&](double x) {
        const double u = (x - x0) / h;
        return -(u - 1) * (u - 2) * (u - 3) / 6.0 * v0 + u * (u - 2) * (u - 3) / 2.0 * v1 -
               u * (u - 1) * (u - 3) / 2.0 * v2 + u * (u - 1) * (u - 2) / 6.0 * v3;
    };
    const auto dcubic = [&](double x) {
        const double u = (x - x0) / h;
        const double d0 = -(3 * u * u - 12 * u + 11) / 6.0;
        const double d1 = (3 * u * u - 10 * u + 6) / 2.0;
        const double d2 = -(3 * u * u - 8 * u + 3) / 2.0;
        const double d3 = (3 * u * u - 6 * u + 2) / 6.0;
        return (d0 * v0 + d1 * v1 + d2 * v2 + d3 * v3) / h;
    };
    // Rounding in the interpolant can move an endpoint across the target; the nearer endpoint is the root then.
    const double lo = cubic(w.at(p)) - target, hi = cubic(w.at(p + 1)) - target;
    if (lo * hi > 0.0) return std::abs(lo) < std::abs(hi) ? w.at(p) : w.at(p + 1);
    return monotone_invert(cubic, target, w.at(p), w.at(p + 1), dcubic, InvertOptions{1e-13, 300});
}

ResidualReport f_pde_residual(const MfgSolution& s) {
    ResidualReport rep;
    rep.check = "f_equation";
    rep.grid = s.grid.describe();
    const auto& g = s.grid;
    const YWindow win = interior_third(g);
    const double dy = g.dy(), dt = g.dt(), dm = s.mbar.step();
    for (std::size_t n = 1; n + 1 < g.nt; ++n)
        for (std::size_t i = 1; i + 1 < g.ny; ++i) {
            const double y = g.y(i);
            if (y < win.lo || y > win.hi) continue;
            const double c = s.market->c.eval(y, g.t(n));
            for (std::size_t k = 2; k + 2 < s.mbar.n; ++k) {
                const auto& f = s.f;
                const double ft = (f(i, n + 1, k) - f(i, n - 1, k)) / (2 * dt);
                const double fyy = (f(i + 1, n, k) - 2 * f(i, n, k) + f(i - 1, n, k)) / (dy * dy);
                const double fmm = (f(i, n, k + 1) - 2 * f(i, n, k) + f(i, n, k - 1)) / (dm * dm);
                const double fym =
                    (f(i + 1, n, k + 1) - f(i + 1, n, k - 1) - f(i - 1, n, k + 1) + f(i - 1, n, k - 1)) /
                    (4 * dy * dm);
                const double a = (s.f_y(i, n, k) + c) / (1.0 - s.f_m(i, n, k));
                const double r = ft + 0.5 * a * a * fmm + a * fym + 0.5 * fyy;
                rep.add(r, y, g.t(n), s.mbar.at(k), i, n, k);
            }
        }
    rep.finish();
    return rep;
}

}  // namespace

MfgSolution build_mfg(const CouplingSpec& coupling, std::shared_ptr<const MarketModel> market, const MfgGrid& mg) {
    MfgSolution s;
    s.coupling = as_general_mean(coupling);
    s.market = std::move(market);
    s.grid = mg.grid;
    s.mbar = mg.mbar;
    s.grid.validate();
    s.mbar.validate("mbar");
    const auto& mkt = s.market->grid();
    if (s.grid.y_lo < mkt.y_lo || s.grid.y_hi > mkt.y_hi || std::abs(s.grid.T - mkt.T) > 1e-12)
        throw InputError("mfg grid must lie inside the market grid with the same horizon");

    s.q = build_q(*s.market, s.grid);
    const YWindow win = interior_third(s.grid);
    for (std::size_t n = 0; n < s.grid.nt; n += 10)
        for (std::size_t i = 0; i < s.grid.ny; i += 4) {
            const double y = s.grid.y(i);
            if (y < win.lo || y > win.hi) continue;
            s.q_mismatch = std::max(s.q_mismatch, std::abs(s.q(i, n) - q_formula(*s.market, y, s.grid.t(n))));
        }

    s.g = build_g(s.coupling, *s.market, s.q, s.grid, s.mbar, s.w);
    std::string where;
    s.min_g_w = min_w_slope(s.g, where);
    if (!(s.min_g_w > 0.0)) {
        std::ostringstream os;
        os << "g is not increasing in w: slope " << s.min_g_w << " at " << where;
        throw ConsistencyError(os.str());
    }

    s.f = FieldSurface(s.grid, s.mbar);
    std::vector<double> row(s.w.n);
    const std::size_t nT = s.grid.nt - 1;
    for (std::size_t n = 0; n < s.grid.nt; ++n)
        for (std::size_t i = 0; i < s.grid.ny; ++i) {
            for (std::size_t p = 0; p < s.w.n; ++p) row[p] = s.g(i, n, p);
            for (std::size_t k = 0; k < s.mbar.n; ++k) {
                const double m = s.mbar.at(k);
                const double w = invert_row(s.g, i, n, row, m);
                s.f(i, n, k) = m - w - s.q(i, n);
            }
        }
    for (std::size_t k = 0; k < s.mbar.n; ++k) {
        const double Cm = s.coupling.C(s.mbar.at(k));
        for (std::size_t i = 0; i < s.grid.ny; ++i) {
            s.terminal_mismatch = std::max(s.terminal_mismatch, std::abs(s.f(i, nT, k) - Cm));
            s.f(i, nT, k) = Cm;
        }
    }
    s.f_y = diff_y(s.f, 4);
    s.f_m = diff_param(s.f, 4);

    s.min_one_minus_f_m = INFINITY;
    for (std::size_t k = 0; k < s.mbar.n; ++k)
        for (std::size_t n = 0; n < s.grid.nt; ++n)
            for (std::size_t i = 0; i < s.grid.ny; ++i) {
                const double d = 1.0 - s.f_m(i, n, k);
                if (d < s.min_one_minus_f_m) {
                    s.min_one_minus_f_m = d;
                    where = node_text(s.grid.y(i), s.mbar.at(k), s.grid.t(n));
                }
            }
    if (!(s.min_one_minus_f_m > 0.0)) {
        std::ostringstream os;
        os << "equilibrium degeneracy: 1 - f_m = " << s.min_one_minus_f_m << " at " << where;
        throw ConsistencyError(os.str());
    }
    s.f_residual = f_pde_residual(s);
    return s;
}

MfgSolution build_mfg(const CouplingSpec& coupling, std::shared_ptr<const MarketModel> market) {
    const MfgGrid g = default_mfg_grid(market->grid());
    return build_mfg(coupling, std::move(market), g);
}

double equilibrium_control_expo(const MfgSolution& sol, double y, double mbar, double t) {
    return sol.pi_star(y, mbar, t);
}

double mfg_value_expo(const MfgSolution& sol, double x, double y, double mbar, double t) {
    return -std::exp(-(x - sol.eval_f(y, mbar, t)) + sol.market->k.eval(y, t));
}

EquilibriumBundle simulate_equilibrium_expo(const MfgSolution& sol, const EquilibriumRequest& req) {
    const MarketModel& m = *sol.market;
    const double T = sol.grid.T;
    if (req.n_paths < 1 || req.n_steps < 1) throw InputError("equilibrium: n_paths and n_steps must be >= 1");
    if (!(req.t0 >= 0.0 && req.t0 < T)) throw InputError("equilibrium: t0 must lie in [0, T)");
    if (req.record_stride > 0 && req.n_steps % req.record_stride != 0)
        throw InputError("equilibrium: record_stride must divide n_steps");
    EquilibriumBundle eb;
    PathBundle& b = eb.paths;
    b.seed = req.seed;
    b.measure = req.measure;
    b.x0 = req.x0;
    b.y0 = req.y0;
    b.t0 = req.t0;
    b.T = T;
    b.n_paths = req.n_paths;
    b.n_steps = req.n_steps;
    const double ds = (T - req.t0) / static_cast<double>(b.n_steps);
    const std::size_t stride = req.record_stride == 0 ? b.n_steps : req.record_stride;
    for (std::size_t j = 0; j <= b.n_steps; j += stride) {
        b.steps.push_back(j);
        b.times.push_back(j == b.n_steps ? T : req.t0 + ds * static_cast<double>(j));
    }
    const std::size_t R = b.times.size();
    for (auto* v : {&b.W, &b.Y, &b.L, &b.X, &b.alpha, &eb.Xbar, &eb.Xbar_sde}) v->assign(b.n_paths * R, NAN);
    b.alpha_sq_integral.assign(b.n_paths, NAN);
    b.valid.assign(b.n_paths, 1);
    eb.f_valid.assign(b.n_paths, 1);
    eb.sde_valid.assign(b.n_paths, 1);
    eb.coupling_T.assign(b.n_paths, NAN);
    eb.f0 = sol.eval_f(req.y0, req.mbar0, req.t0);
    const double v0 = req.mbar0 - eb.f0;
    const double base = req.x0 - eb.f0;
    const double sq = std::sqrt(ds);
    const bool physical = req.measure == Measure::Physical;
    std::vector<double> gaps;

    for (std::size_t p = 0; p < b.n_paths; ++p) {
        const auto record = [&](std::size_t k, double W, double Y, double L, double s, double xs) {
            const std::size_t o = p * R + k;
            b.W[o] = W;
            b.Y[o] = Y;
            b.L[o] = L;
            eb.Xbar_sde[o] = xs;
            const double xb = k == 0 ? req.mbar0 : sol.G(Y, v0 + L, s);
            eb.Xbar[o] = xb;
            try {
                const double f = sol.eval_f(Y, xb, s);
                b.X[o] = base + L + f;
                b.alpha[o] = sol.pi_star(Y, xb, s);
                eb.conservation_max = std::max(eb.conservation_max, std::abs(b.X[o] - f - L - base));
            } catch (const RangeError&) {
                eb.f_valid[p] = 0;
            }
        };
        PathRng rng(req.seed, Stream::CommonNoise, p);
        double W = 0.0, Y = req.y0, L = 0.0, xs = req.mbar0;
        double s = req.t0;
        bool sde_ok = true;
        try {
            record(0, W, Y, L, s, xs);
            double c = m.c.eval(Y, s);
            double bb = physical ? m.b(Y, s) : 0.0;
            std::size_t k = 1;
            for (std::size_t j = 0; j < b.n_steps; ++j) {
                const double dW = sq * rng.normal();
                if (sde_ok) {
                    try {
                        xs += sol.pi_star(Y, xs, s) * (bb * ds + dW);
                    } catch (const std::exception&) {
                        sde_ok = false;
                        xs = NAN;
                    }
                }
                const double s1 = (j + 1 == b.n_steps) ? T : req.t0 + ds * static_cast<double>(j + 1);
                const double Y1 = Y + bb * ds + dW;
                if (Y1 < sol.grid.y_lo || Y1 > sol.grid.y_hi) throw RangeError("factor left the mfg grid");
                const double c1 = m.c.eval(Y1, s1);
                const double b1 = physical ? m.b(Y1, s1) : 0.0;
                L += 0.5 * (c * bb + c1 * b1) * ds + c * dW;
                W += dW;
                Y = Y1;
                s = s1;
                c = c1;
                bb = b1;
                if (k < R && b.steps[k] == j + 1) {
                    record(k, W, Y, L, s, xs);
                    ++k;
                }
            }
            eb.coupling_T[p] = sol.coupling.C(eb.Xbar[p * R + R - 1]);
        } catch (const std::exception& e) {
            b.valid[p] = 0;
            ++b.excluded;
            if (b.first_failure.empty()) {
                std::ostringstream os;
                os << "path " << p << ": " << e.what();
                b.first_failure = os.str();
            }
            continue;
        }
        eb.sde_valid[p] = sde_ok ? 1 : 0;
        if (sde_ok) gaps.push_back(std::abs(xs - eb.Xbar[p * R + R - 1]));
    }
    eb.route_gap = estimate_mean(gaps);
    if (std::isfinite(req.route_tolerance)) {
        const double worst = gaps.empty() ? 0.0 : *std::max_element(gaps.begin(), gaps.end());
        if (worst > req.route_tolerance) {
            std::ostringstream os;
            os << "equilibrium: Xbar routes disagree by " << worst << " > " << req.route_tolerance;
            throw ConsistencyError(os.str());
        }
    }
    return eb;
}

namespace {

double atoms_mean(const std::vector<std::pair<double, double>>& atoms) {
    if (atoms.empty()) throw InputError("linear coupling: initial distribution has no atoms");
    double sw = 0.0, sx = 0.0;
    for (const auto& [x, w] : atoms) {
        if (!(w > 0.0) || !std::isfinite(x)) throw InputError("linear coupling: atoms need finite x and weight > 0");
        sw += w;
        sx += w * x;
    }
    return sx / sw;
}

double atoms_weight(const std::vector<std::pair<double, double>>& atoms) {
    double sw = 0.0;
    for (const auto& a : atoms) sw += a.second;
    return sw;
}

void check_theta(double theta) {
    if (!(theta > 0.0 && theta < 1.0)) {
        std::ostringstream os;
        os << "linear coupling: theta = " << theta << " must lie in (0,1)";
        throw InputError(os.str());
    }
}

}  // namespace

LinearEquilibrium linear_coupling_solution(const HSurface& single, double theta,
                                           const std::vector<std::pair<double, double>>& atoms,
                                           const SimulationRequest& request) {
    check_theta(theta);
    LinearEquilibrium out;
    out.theta = theta;
    out.mbar = atoms_mean(atoms);
    const double sw = atoms_weight(atoms);
    SimulationRequest r = request;
    r.x0 = request.x0 - theta * out.mbar;
    out.base = simulate_paths(single, r);
    PathBundle& b = out.base;
    std::vector<double> z0;
    for (const auto& a : atoms) z0.push_back(single.H_inverse(a.first - theta * out.mbar, request.y0, request.t0));
    const std::size_t R = b.n_records();
    out.Xbar.assign(b.n_paths * R, NAN);
    out.X.assign(b.n_paths * R, NAN);
    out.pi.assign(b.n_paths * R, NAN);
    for (std::size_t p = 0; p < b.n_paths; ++p) {
        if (!b.valid[p]) continue;
        try {
            for (std::size_t k = 0; k < R; ++k) {
                const double L = b.at(b.L, p, k), Y = b.at(b.Y, p, k), s = b.times[k];
                double sx = 0.0, sa = 0.0;
                for (std::size_t j = 0; j < atoms.size(); ++j) {
                    sx += atoms[j].second * single.H(z0[j] + L, Y, s);
                    sa += atoms[j].second * single.alpha_at_z(z0[j] + L, Y, s);
                }
                sx /= sw;
                sa /= sw;
                const std::size_t o = p * R + k;
                out.Xbar[o] = sx / (1.0 - theta);
                out.X[o] = b.X[o] + theta * out.Xbar[o];
                out.pi[o] = b.alpha[o] + theta / (1.0 - theta) * sa;
            }
        } catch (const std::exception& e) {
            b.valid[p] = 0;
            ++b.excluded;
            if (b.first_failure.empty()) b.first_failure = e.what();
        }
    }
    out.value = estimate_value(b, single.utility);
    return out;
}

double pi_linear_feedback(const HSurface& single, double theta, const std::vector<std::pair<double, double>>& atoms,
                          double x, double y, double t) {
    check_theta(theta);
    const double mbar = atoms_mean(atoms);
    double sa = 0.0;
    for (const auto& [xj, w] : atoms) sa += w * feedback_control(single, xj - theta * mbar, y, t);
    sa /= atoms_weight(atoms);
    return feedback_control(single, x - theta * mbar, y, t) + theta / (1.0 - theta) * sa;
}

ResidualReport optimality_residual(const MfgSolution& sol,
                                   const std::function<double(double y, double mbar, double t)>& pi,
                                   const std::vector<Probe3>& probes) {
    ResidualReport rep;
    rep.check = "optimality_expo";
    std::size_t idx = 0;
    for (const auto& p : probes) {
        const double r = pi(p.y, p.a, p.t) * (1.0 - sol.eval_f_m(p.y, p.a, p.t)) - sol.eval_f_y(p.y, p.a, p.t) -
                         sol.market->c.eval(p.y, p.t);
        rep.add(r, p.y, p.t, p.a, 0, 0, idx++);
    }
    rep.finish();
    return rep;
}

ResidualReport optimality_residual(const HSurface& single, double theta,
                                   const std::vector<std::pair<double, double>>& atoms,
                                   const std::function<double(double x, double y, double t)>& pi,
                                   const std::vector<Probe3>& probes) {
    check_theta(theta);
    const double mbar = atoms_mean(atoms);
    const double sw = atoms_weight(atoms);
    ResidualReport rep;
    rep.check = "optimality_linear";
    std::size_t idx = 0;
    for (const auto& p : probes) {
        double avg = 0.0;
        for (const auto& [xj, w] : atoms) avg += w * pi(xj, p.y, p.t);
        avg /= sw;
        const double r = pi(p.a, p.y, p.t) - theta * avg - feedback_control(single, p.a - theta * mbar, p.y, p.t);
        rep.add(r, p.y, p.t, p.a, 0, 0, idx++);
    }
    rep.finish();
    return rep;
}

IndifferenceReport indifference_price_check(const MfgSolution& sol, double y0, double mbar0, double t0,
                                            std::size_t n_paths, std::size_t n_steps, std::uint64_t seed) {
    EquilibriumRequest r;
    r.x0 = mbar0;
    r.mbar0 = mbar0;
    r.y0 = y0;
    r.t0 = t0;
    r.n_paths = n_paths;
    r.n_steps = (n_steps + 3) / 4 * 4;
    r.record_stride = r.n_steps / 4;
    r.seed = seed;
    r.measure = Measure::RiskNeutral;
    const auto eb = simulate_equilibrium_expo(sol, r);
    const PathBundle& b = eb.paths;
    IndifferenceReport rep;
    rep.f0 = eb.f0;
    rep.excluded = b.excluded;
    std::vector<double> price;
    for (std::size_t p = 0; p < b.n_paths; ++p)
        if (b.valid[p]) price.push_back(eb.coupling_T[p]);
    rep.price = estimate_mean(price);
    rep.price_ok = std::abs(rep.price.mean - rep.f0) <= 3.0 * rep.price.std_error;
    rep.martingale_ok = true;
    const std::size_t R = b.n_records();
    for (std::size_t k = 1; k + 1 < R; ++k) {
        Checkpoint cp;
        cp.s = b.times[k];
        std::vector<double> inc;
        for (std::size_t p = 0; p < b.n_paths; ++p) {
            if (!b.valid[p]) continue;
            const auto f_at = [&](std::size_t kk) {
                return kk == 0 ? eb.f0 : sol.eval_f(b.at(b.Y, p, kk), eb.Xbar[p * R + kk], b.times[kk]);
            };
            try {
                inc.push_back(f_at(k) - f_at(k - 1));
            } catch (const RangeError&) {
                ++cp.excluded;
            }
        }
        cp.increment = estimate_mean(inc);
        if (std::abs(cp.increment.mean) > 3.0 * cp.increment.std_error) rep.martingale_ok = false;
        rep.checkpoints.push_back(cp);
    }
    return rep;
}

MasterReport master_reduction_check(const MfgSolution& sol) {
    MasterReport rep;
    const auto& g = sol.grid;
    const auto& prior = sol.market->prior;
    const double T = g.T;
    for (std::size_t i = 0; i < g.ny; i += 8)
        for (std::size_t k = 0; k < sol.mbar.n; k += 8)
            for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
                const double y = g.y(i), mb = sol.mbar.at(k);
                const double F = eval_F(prior, y, T);
                const double W = mfg_value_expo(sol, x, y, mb, T) * F;
                const double JF = -std::exp(-(x - sol.coupling.C(mb))) * F;
                rep.terminal_max = std::max(rep.terminal_max, std::abs(W - JF) / std::abs(JF));
                ++rep.terminal_count;
            }
    // Off-node probes so the table interpolation is exercised.
    for (double t : {0.1013 * T, 0.4471 * T, 0.8029 * T})
        for (double y : {-1.013, 0.021, 1.337})
            for (double mb : {-1.511, 0.263, 2.019}) {
                const double w = monotone_invert([&](double v) { return sol.g.eval(y, t, v); }, mb, sol.w.lo,
                                                 sol.w.hi);
                const double f_direct = mb - w - sol.q.eval(y, t);
                const double F = eval_F(prior, y, t);
                for (double x : {-1.0, 0.5}) {
                    const double W = mfg_value_expo(sol, x, y, mb, t) * F;
                    const double closed = -std::exp(-(x - f_direct) + sol.market->k.eval(y, t)) * F;
                    rep.interior_max = std::max(rep.interior_max, std::abs(W - closed) / std::abs(closed));
                    ++rep.interior_count;
                }
            }
    return rep;
}

}  // namespace mfgpi
