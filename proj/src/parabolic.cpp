#include "mfgpi/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "mfgpi/errors.hpp"

namespace mfgpi {

namespace {

struct Closure {
    double b[3];
};

Closure closure_for(BoundaryPolicy policy) {
    if (policy == BoundaryPolicy::ZeroSecondDerivative) return {{2.0, -1.0, 0.0}};
    return {{3.0, -3.0, 1.0}};
}

double eval_or_zero(const CoefFn& f, double y, double t) { return f ? f(y, t) : 0.0; }

// Coefficients sampled at every node, row n contiguous in y.
struct CoefTables {
    std::vector<double> a, r, s;
};

CoefTables sample(const ParabolicProblem& pb, const SpaceTimeGrid& g) {
    CoefTables c;
    c.a.resize(g.ny * g.nt);
    c.r.resize(g.ny * g.nt);
    c.s.resize(g.ny * g.nt);
    for (std::size_t n = 0; n < g.nt; ++n) {
        const double t = g.t(n);
        for (std::size_t i = 0; i < g.ny; ++i) {
            const double y = g.y(i);
            const std::size_t k = n * g.ny + i;
            c.a[k] = eval_or_zero(pb.drift, y, t);
            c.r[k] = eval_or_zero(pb.reaction, y, t);
            c.s[k] = eval_or_zero(pb.source, y, t);
            if (!std::isfinite(c.a[k]) || !std::isfinite(c.r[k]) || !std::isfinite(c.s[k])) {
                std::ostringstream os;
                os << "parabolic solve: non-finite coefficient at y=" << y << ", t=" << t;
                throw InputError(os.str());
            }
        }
    }
    return c;
}

// Factored reduced tridiagonal system for one implicit level.
struct Level {
    std::vector<double> lower, diag, upper;  // reduced system, size K = ny - 2
    std::vector<double> cprime, inv_den;     // Thomas factors
    double e_lo = 0.0;                       // R'_0 = R_0 - e_lo * R_1
    double e_hi = 0.0;                       // R'_{K-1} = R_{K-1} - e_hi * R_{K-2}
};

class Marcher {
public:
    Marcher(const ParabolicProblem& pb, const SpaceTimeGrid& g, Scheme scheme)
        : g_(g), coef_(sample(pb, g)), closure_(closure_for(pb.boundary)) {
        if (g.ny < 5) throw InputError("parabolic solve: need at least 5 y-nodes");
        theta_ = scheme == Scheme::CrankNicolson ? 0.5 : 1.0;
        levels_.resize(g.nt - 1);
        for (std::size_t n = 0; n + 1 < g.nt; ++n) build_level(n);
    }

    // Given the row at level n+1 (complete, with boundary values), write level n.
    void step(std::size_t n, const double* next, double* out, std::vector<double>& work) const {
        const std::size_t m = g_.ny;
        const std::size_t K = m - 2;
        const double dt = g_.dt();
        const double h = g_.dy();
        const double alpha = 0.5 / (h * h);
        const double ex = 1.0 - theta_;
        const double* a1 = &coef_.a[(n + 1) * m];
        const double* r1 = &coef_.r[(n + 1) * m];
        const double* s1 = &coef_.s[(n + 1) * m];
        const double* s0 = &coef_.s[n * m];
        work.resize(2 * K);
        double* rhs = work.data();
        double* x = work.data() + K;
        for (std::size_t k = 0; k < K; ++k) {
            const std::size_t i = k + 1;
            double v = next[i];
            if (ex > 0.0) {
                const double beta = a1[i] / (2.0 * h);
                v += ex * dt *
                     (alpha * (next[i + 1] - 2.0 * next[i] + next[i - 1]) +
                      beta * (next[i + 1] - next[i - 1]) + r1[i] * next[i]);
            }
            v -= dt * (theta_ * s0[i] + ex * s1[i]);
            rhs[k] = v;
        }
        const Level& L = levels_[n];
        const double r0 = rhs[0] - L.e_lo * rhs[1];
        const double rK = rhs[K - 1] - L.e_hi * rhs[K - 2];
        rhs[0] = r0;
        rhs[K - 1] = rK;
        // forward sweep
        x[0] = rhs[0] * L.inv_den[0];
        for (std::size_t k = 1; k < K; ++k) x[k] = (rhs[k] - L.lower[k] * x[k - 1]) * L.inv_den[k];
        for (std::size_t k = K - 1; k-- > 0;) x[k] -= L.cprime[k] * x[k + 1];
        // residual of the reduced system
        double res = 0.0;
        double scale = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            double ax = L.diag[k] * x[k];
            if (k > 0) ax += L.lower[k] * x[k - 1];
            if (k + 1 < K) ax += L.upper[k] * x[k + 1];
            res = std::max(res, std::abs(ax - rhs[k]));
            scale = std::max(scale, std::abs(rhs[k]) + std::abs(L.diag[k] * x[k]));
        }
        if (!(res <= 1e-12 * std::max(scale, 1e-300)) && scale > 0.0) {
            std::ostringstream os;
            os << "parabolic solve: linear-solve residual " << res << " exceeds tolerance at level " << n;
            throw NumericalError(os.str());
        }
        for (std::size_t k = 0; k < K; ++k) out[k + 1] = x[k];
        const auto& b = closure_.b;
        out[0] = b[0] * out[1] + b[1] * out[2] + b[2] * out[3];
        out[m - 1] = b[0] * out[m - 2] + b[1] * out[m - 3] + b[2] * out[m - 4];
    }

private:
    void build_level(std::size_t n) {
        const std::size_t m = g_.ny;
        const std::size_t K = m - 2;
        const double dt = g_.dt();
        const double h = g_.dy();
        const double alpha = 0.5 / (h * h);
        const double* a0 = &coef_.a[n * m];
        const double* r0 = &coef_.r[n * m];
        Level& L = levels_[n];
        L.lower.assign(K, 0.0);
        L.diag.assign(K, 0.0);
        L.upper.assign(K, 0.0);
        std::vector<double> lo(m), di(m), up(m);
        for (std::size_t i = 1; i + 1 < m; ++i) {
            const double beta = a0[i] / (2.0 * h);
            lo[i] = -theta_ * dt * (alpha - beta);
            di[i] = 1.0 - theta_ * dt * (-2.0 * alpha + r0[i]);
            up[i] = -theta_ * dt * (alpha + beta);
        }
        for (std::size_t k = 0; k < K; ++k) {
            const std::size_t i = k + 1;
            L.lower[k] = lo[i];
            L.diag[k] = di[i];
            L.upper[k] = up[i];
        }
        const auto& b = closure_.b;
        // bottom: v0 = b0 v1 + b1 v2 + b2 v3
        {
            const double l1 = lo[1];
            L.diag[0] += l1 * b[0];
            L.upper[0] += l1 * b[1];
            const double e = l1 * b[2];
            if (e != 0.0) {
                const double u2 = up[2];
                if (std::abs(u2) < 1e-300) throw NumericalError("parabolic solve: singular lower closure");
                L.diag[0] -= e * lo[2] / u2;
                L.upper[0] -= e * di[2] / u2;
                L.e_lo = e / u2;
            }
        }
        // top: v_{m-1} = b0 v_{m-2} + b1 v_{m-3} + b2 v_{m-4}
        {
            const double uK = up[m - 2];
            L.diag[K - 1] += uK * b[0];
            L.lower[K - 1] += uK * b[1];
            const double e = uK * b[2];
            if (e != 0.0) {
                const double l3 = lo[m - 3];
                if (std::abs(l3) < 1e-300) throw NumericalError("parabolic solve: singular upper closure");
                L.lower[K - 1] -= e * di[m - 3] / l3;
                L.diag[K - 1] -= e * up[m - 3] / l3;
                L.e_hi = e / l3;
            }
        }
        L.cprime.assign(K, 0.0);
        L.inv_den.assign(K, 0.0);
        double prev_c = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double den = L.diag[k] - (k > 0 ? L.lower[k] * prev_c : 0.0);
            if (!(std::abs(den) > 1e-300) || !std::isfinite(den)) {
                std::ostringstream os;
                os << "parabolic solve: singular tridiagonal system at t=" << g_.t(n);
                throw NumericalError(os.str());
            }
            L.inv_den[k] = 1.0 / den;
            prev_c = (k + 1 < K ? L.upper[k] : 0.0) / den;
            L.cprime[k] = prev_c;
        }
    }

    SpaceTimeGrid g_;
    CoefTables coef_;
    Closure closure_;
    double theta_ = 0.5;
    std::vector<Level> levels_;
};

void fill_terminal(double* row, const SpaceTimeGrid& g, const std::function<double(double)>& terminal) {
    for (std::size_t i = 0; i < g.ny; ++i) {
        const double v = terminal(g.y(i));
        if (!std::isfinite(v)) {
            std::ostringstream os;
            os << "parabolic solve: non-finite terminal value at y=" << g.y(i);
            throw InputError(os.str());
        }
        row[i] = v;
    }
}

}  // namespace

FieldSurface solve_terminal_parabolic(const ParabolicProblem& problem, const SpaceTimeGrid& grid,
                                      Scheme scheme) {
    grid.validate();
    if (!problem.terminal) throw InputError("parabolic solve: missing terminal condition");
    Marcher marcher(problem, grid, scheme);
    FieldSurface out(grid);
    fill_terminal(out.row(grid.nt - 1), grid, problem.terminal);
    std::vector<double> work;
    for (std::size_t n = grid.nt - 1; n-- > 0;) marcher.step(n, out.row(n + 1), out.row(n), work);
    return out;
}

FieldSurface solve_parabolic_family(const ParabolicProblem& problem,
                                    const std::function<double(double, double)>& terminal,
                                    const SpaceTimeGrid& grid, const Axis& axis, Scheme scheme) {
    grid.validate();
    axis.validate("family");
    Marcher marcher(problem, grid, scheme);
    FieldSurface out(grid, axis);
    for (std::size_t p = 0; p < axis.n; ++p) {
        const double param = axis.at(p);
        fill_terminal(out.row(grid.nt - 1, p), grid, [&](double y) { return terminal(y, param); });
    }
    std::vector<double> work;
    for (std::size_t p = 0; p < axis.n; ++p)
        for (std::size_t n = grid.nt - 1; n-- > 0;) marcher.step(n, out.row(n + 1, p), out.row(n, p), work);
    return out;
}

void ResidualReport::add(double r, double y_, double t_, double param_, std::size_t i_, std::size_t n_,
                         std::size_t p_) {
    const double a = std::abs(r);
    if (!std::isfinite(a)) {
        max_abs = std::numeric_limits<double>::infinity();
    }
    if (a > max_abs || count == 0) {
        max_abs = std::max(max_abs, a);
        y = y_;
        t = t_;
        param = param_;
        i = i_;
        n = n_;
        p = p_;
    }
    sum_sq_ += a * a;
    ++count;
}

void ResidualReport::finish() { l2 = count ? std::sqrt(sum_sq_ / static_cast<double>(count)) : 0.0; }

std::string ResidualReport::node() const {
    std::ostringstream os;
    os.precision(6);
    os << "y=" << y << " t=" << t;
    if (param != 0.0 || p != 0) os << " p=" << param;
    return os.str();
}

ResidualReport fd_residual(const FieldSurface& field, const ParabolicProblem& problem, YWindow window) {
    const auto& g = field.grid();
    ResidualReport rep;
    rep.grid = g.describe();
    const double h = g.dy();
    const double dt = g.dt();
    for (std::size_t p = 0; p < field.np(); ++p) {
        const double param = field.stacked() ? field.param().at(p) : 0.0;
        for (std::size_t n = 1; n + 1 < g.nt; ++n) {
            const double t = g.t(n);
            const double* v = field.row(n, p);
            const double* vp = field.row(n + 1, p);
            const double* vm = field.row(n - 1, p);
            for (std::size_t i = 1; i + 1 < g.ny; ++i) {
                const double y = g.y(i);
                if (y < window.lo || y > window.hi) continue;
                const double vt = (vp[i] - vm[i]) / (2.0 * dt);
                const double vyy = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
                const double vy = (v[i + 1] - v[i - 1]) / (2.0 * h);
                const double r = vt + 0.5 * vyy + eval_or_zero(problem.drift, y, t) * vy +
                                 eval_or_zero(problem.reaction, y, t) * v[i] -
                                 eval_or_zero(problem.source, y, t);
                rep.add(r, y, t, param, i, n, p);
            }
        }
    }
    rep.finish();
    return rep;
}

}  // namespace mfgpi
