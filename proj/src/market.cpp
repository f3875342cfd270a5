#include "mfgpi/market.hpp"

#include <cmath>
#include <sstream>

#include "mfgpi/errors.hpp"

namespace mfgpi {

namespace {

// Tolerance for the node-wise k bounds; the discrete solve is exact up to roundoff there.
constexpr double kBoundTol = 1e-9;
// Allowed |c - (b + k_y)| on the interior third: two second-order discretizations.
constexpr double kCMismatchTol = 1e-3;

[[noreturn]] void breach(const std::string& what, const SpaceTimeGrid& g, std::size_t i, std::size_t n,
                         double value) {
    std::ostringstream os;
    os.precision(10);
    os << "market: " << what << " violated at y=" << g.y(i) << ", t=" << g.t(n) << " (value " << value << ")";
    throw ConsistencyError(os.str());
}

}  // namespace

YWindow interior_third(const SpaceTimeGrid& grid) {
    const double third = (grid.y_hi - grid.y_lo) / 3.0;
    return {grid.y_lo + third, grid.y_hi - third};
}

MarketModel build_market(const PriorMeasure& prior, const SpaceTimeGrid& grid, Scheme scheme) {
    MarketModel m;
    m.prior = prior;
    m.filter = build_filter_surface(prior, grid);
    const auto& g = grid;

    ParabolicProblem kp;
    kp.terminal = [](double) { return 0.0; };
    kp.source = [&prior](double y, double t) {
        const double b = eval_b(prior, y, t);
        return 0.5 * b * b;
    };
    m.k = solve_terminal_parabolic(kp, g, scheme);

    ParabolicProblem cp;
    cp.terminal = [&prior, &g](double y) { return eval_b(prior, y, g.T); };
    m.c = solve_terminal_parabolic(cp, g, scheme);

    m.k_y = diff_y(m.k);
    m.n = FieldSurface(g);
    m.n_y = FieldSurface(g);
    for (std::size_t n = 0; n < g.nt; ++n)
        for (std::size_t i = 0; i < g.ny; ++i) {
            m.n(i, n) = m.k(i, n) + eval_log_F(prior, g.y(i), g.t(n));
            m.n_y(i, n) = m.filter.b(i, n) + m.k_y(i, n);
        }

    const double th1 = prior.theta_min;
    const double th2 = prior.theta_max;
    const YWindow mid = interior_third(g);
    for (std::size_t n = 0; n < g.nt; ++n) {
        const double tau = g.T - g.t(n);
        for (std::size_t i = 0; i < g.ny; ++i) {
            const double k = m.k(i, n);
            if (!std::isfinite(k) || !std::isfinite(m.c(i, n))) breach("finiteness of k and c", g, i, n, k);
            if (k < -0.5 * th2 * th2 * tau - kBoundTol) breach("k >= -theta_max^2 (T-t)/2", g, i, n, k);
            if (k > -0.5 * th1 * th1 * tau + kBoundTol) breach("k <= -theta_min^2 (T-t)/2", g, i, n, k);
            const double y = g.y(i);
            if (y >= mid.lo && y <= mid.hi) {
                const double d = std::abs(m.c(i, n) - m.n_y(i, n));
                m.c_mismatch = std::max(m.c_mismatch, d);
                if (d > kCMismatchTol) breach("c = b + k_y", g, i, n, d);
            }
        }
    }
    for (std::size_t i = 0; i < g.ny; ++i)
        if (m.c(i, g.nt - 1) != eval_b(prior, g.y(i), g.T)) breach("c(y,T) = b(y,T)", g, i, g.nt - 1, m.c(i, g.nt - 1));

    auto kres = fd_residual(m.k, kp, mid);
    kres.check = "k_equation";
    auto cres = fd_residual(m.c, cp, mid);
    cres.check = "c_heat_equation";
    m.reports = {kres, cres};
    return m;
}

}  // namespace mfgpi
