#include <cmath>

#include "doctest.h"
#include "mfgpi/errors.hpp"
#include "mfgpi/residuals.hpp"

using namespace mfgpi;

namespace {

PriorMeasure two_point() { return PriorMeasure::from_atoms({{0.2, 0.5}, {0.8, 0.5}}); }

std::shared_ptr<const MarketModel> market_at(int level) {
    static std::shared_ptr<const MarketModel> cache[2];
    if (!cache[level]) {
        SpaceTimeGrid g;
        g.ny = level ? 481 : 241;
        g.nt = level ? 401 : 201;
        cache[level] = std::make_shared<const MarketModel>(build_market(two_point(), g));
    }
    return cache[level];
}

std::vector<Probe3> probes() { return probe_lattice({-1, 0, 1}, {-1, 0, 1}, {0.2, 0.5, 0.8}); }

Steps3 market_steps(const MarketModel& m) { return {m.grid().dy(), m.grid().dy(), m.grid().dt()}; }

Steps3 h_steps(const HSurface& s) { return {s.hgrid.z.step(), s.hgrid.grid.dy(), s.hgrid.grid.dt()}; }

}  // namespace

TEST_CASE("exponential closed form solves the HJB and R equations") {
    const auto m = market_at(0);
    const auto u = [&](double x, double y, double t) { return -std::exp(-x + m->k.eval(y, t)); };
    const auto hjb = hjb_residual(u, *m, probes(), market_steps(*m));
    CHECK(hjb.count == 27);
    CHECK(hjb.max_abs < 1e-5);
    const auto s = build_H_surface(Exponential{1.0}, m);
    CHECK(r_equation_residual(s, probes(), market_steps(*m)).max_abs < 1e-5);
}

TEST_CASE("sahara residuals decay at the scheme order") {
    double hjb[2], R[2], H[2];
    for (int level = 0; level < 2; ++level) {
        const auto m = market_at(level);
        const auto s = build_H_surface(Sahara{1, 1}, m);
        const auto vs = build_value_surface(s);
        hjb[level] = hjb_residual([&](double x, double y, double t) { return vs.u(x, y, t); }, *m, probes(),
                                  h_steps(s))
                         .max_abs;
        R[level] = r_equation_residual(s, probes(), market_steps(*m)).max_abs;
        H[level] = H_pde_residual([&](double z, double y, double t) { return s.H_composed(z, y, t); }, *m,
                                  probes(), h_steps(s))
                       .max_abs;
    }
    MESSAGE("hjb " << hjb[0] << " -> " << hjb[1] << ", R " << R[0] << " -> " << R[1] << ", H " << H[0] << " -> "
                   << H[1]);
    CHECK(hjb[0] / hjb[1] >= 3.0);
    CHECK(R[0] / R[1] >= 3.0);
    CHECK(H[0] / H[1] >= 3.0);
}

TEST_CASE("a local perturbation is localized by the residual report") {
    const auto m = market_at(0);
    const auto u = [&](double x, double y, double t) {
        const double d2 = (x - 1.0) * (x - 1.0) + (y + 1.0) * (y + 1.0) + (t - 0.5) * (t - 0.5);
        return -std::exp(-x + m->k.eval(y, t)) + 1e-3 * std::exp(-d2 / 0.01);
    };
    const auto rep = hjb_residual(u, *m, probes(), market_steps(*m));
    CHECK(rep.max_abs > 1e-2);
    CHECK(rep.param == 1.0);
    CHECK(rep.y == -1.0);
    CHECK(rep.t == 0.5);
}

TEST_CASE("convex candidate is rejected") {
    const auto m = market_at(0);
    const auto u = [](double x, double, double) { return x * x; };
    CHECK_THROWS_AS(hjb_residual(u, *m, probes(), market_steps(*m)), ConsistencyError);
}

TEST_CASE("feedback control meets b r at the horizon") {
    const auto m = market_at(0);
    std::vector<std::pair<double, double>> xy;
    for (double x : {-1.0, 0.0, 0.5, 2.0})
        for (double y : {-1.0, 0.0, 1.0}) xy.push_back({x, y});
    for (const UtilitySpec& u : {UtilitySpec{Exponential{1.0}}, UtilitySpec{Sahara{1, 1}}}) {
        const auto s = build_H_surface(u, m);
        const auto rep = r_terminal_mismatch(s, xy);
        CHECK(rep.count == xy.size());
        CHECK(rep.max_abs < 1e-6);
    }
}

TEST_CASE("closed-form H solves its linear equation") {
    const auto m = market_at(0);
    for (const UtilitySpec& u : {UtilitySpec{Exponential{1.0}}, UtilitySpec{Sahara{1, 1}}}) {
        const auto s = build_H_surface(u, m);
        const auto rep = H_pde_residual([&](double z, double y, double t) { return s.H(z, y, t); }, *m, probes(),
                                        market_steps(*m));
        CHECK(rep.max_abs < 1e-5);
    }
}
