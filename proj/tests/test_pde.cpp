#include <cmath>
#include <random>

#include "doctest.h"
#include "mfgpi/errors.hpp"
#include "mfgpi/invert.hpp"
#include "mfgpi/parabolic.hpp"

using namespace mfgpi;

namespace {

SpaceTimeGrid small_grid() {
    SpaceTimeGrid g;
    g.ny = 121;
    g.nt = 101;
    return g;
}

// Max error against an exact solution over the interior third in y.
double interior_error(const FieldSurface& f, const std::function<double(double, double)>& exact) {
    const auto& g = f.grid();
    const double third = (g.y_hi - g.y_lo) / 3.0;
    double e = 0.0;
    for (std::size_t n = 0; n < g.nt; ++n)
        for (std::size_t i = 0; i < g.ny; ++i) {
            const double y = g.y(i);
            if (y < g.y_lo + third || y > g.y_hi - third) continue;
            e = std::max(e, std::abs(f(i, n) - exact(y, g.t(n))));
        }
    return e;
}

}  // namespace

TEST_CASE("affine terminal data stays affine") {
    ParabolicProblem p;
    p.terminal = [](double y) { return y; };
    const auto g = small_grid();
    const auto f = solve_terminal_parabolic(p, g);
    double e = 0.0;
    for (std::size_t n = 0; n < g.nt; ++n)
        for (std::size_t i = 0; i < g.ny; ++i) e = std::max(e, std::abs(f(i, n) - g.y(i)));
    CHECK(e < 1e-10);
}

TEST_CASE("quadratic terminal data gains T - t") {
    ParabolicProblem p;
    p.terminal = [](double y) { return y * y; };
    const auto g = small_grid();
    const auto f = solve_terminal_parabolic(p, g);
    double e = 0.0;
    for (std::size_t n = 0; n < g.nt; ++n)
        for (std::size_t i = 0; i < g.ny; ++i)
            e = std::max(e, std::abs(f(i, n) - (g.y(i) * g.y(i) + g.T - g.t(n))));
    CHECK(e < 1e-9);
}

TEST_CASE("exponential data with constant drift converges at second order") {
    const double a = 0.5, mu = 0.3;
    ParabolicProblem p;
    p.terminal = [=](double y) { return std::exp(a * y); };
    p.drift = [=](double, double) { return mu; };
    auto exact = [=](double y, double t) { return std::exp(a * y + (a * mu + 0.5 * a * a) * (1.0 - t)); };
    const auto g = small_grid();
    const double e1 = interior_error(solve_terminal_parabolic(p, g), exact);
    const double e2 = interior_error(solve_terminal_parabolic(p, g.refined(2)), exact);
    CHECK(e1 < 1e-3);
    const double ratio = e1 / e2;
    CHECK(ratio >= 3.2);
    CHECK(ratio <= 4.8);
}

TEST_CASE("constant source gives the linear-in-time k") {
    ParabolicProblem p;
    p.terminal = [](double) { return 0.0; };
    p.source = [](double, double) { return 0.5 * 0.25; };
    const auto g = small_grid();
    const auto k = solve_terminal_parabolic(p, g);
    for (std::size_t i = 0; i < g.ny; ++i) CHECK(k(i, 0) == doctest::Approx(-0.125).epsilon(1e-12));
}

TEST_CASE("implicit Euler is first order in time") {
    ParabolicProblem p;
    p.terminal = [](double y) { return std::sin(y); };
    auto exact = [](double y, double t) { return std::sin(y) * std::exp(-0.5 * (1.0 - t)); };
    // Fine in y so the time error dominates.
    auto g = small_grid();
    g.ny = 961;
    g.nt = 51;
    const double e1 = interior_error(solve_terminal_parabolic(p, g, Scheme::ImplicitEuler), exact);
    g.nt = 2 * (g.nt - 1) + 1;
    const double e2 = interior_error(solve_terminal_parabolic(p, g, Scheme::ImplicitEuler), exact);
    CHECK(e1 / e2 > 1.7);
    CHECK(e1 / e2 < 2.3);
}

TEST_CASE("maximum principle and comparison") {
    ParabolicProblem p1, p2;
    p1.terminal = [](double y) { return std::tanh(y); };
    p2.terminal = [](double y) { return std::tanh(y) + 0.1 * std::exp(-y * y); };
    const auto g = small_grid();
    const auto f1 = solve_terminal_parabolic(p1, g);
    const auto f2 = solve_terminal_parabolic(p2, g);
    for (std::size_t n = 0; n < g.nt; ++n)
        for (std::size_t i = 0; i < g.ny; ++i) {
            CHECK(f1(i, n) >= -1.0 - 1e-12);
            CHECK(f1(i, n) <= 1.0 + 1e-12);
            CHECK(f1(i, n) <= f2(i, n) + 1e-12);
        }
}

TEST_CASE("stacked family matches individual solves") {
    ParabolicProblem p;
    p.drift = [](double y, double) { return 0.1 * std::tanh(y); };
    const auto g = small_grid();
    const Axis z{-1.0, 1.0, 5};
    const auto fam = solve_parabolic_family(p, [](double y, double zz) { return y + zz * y * y; }, g, z);
    for (std::size_t k = 0; k < z.n; ++k) {
        ParabolicProblem q = p;
        const double zz = z.at(k);
        q.terminal = [zz](double y) { return y + zz * y * y; };
        const auto single = solve_terminal_parabolic(q, g);
        for (std::size_t i = 0; i < g.ny; i += 7) CHECK(fam(i, 0, k) == single(i, 0));
    }
}

TEST_CASE("non-finite coefficients are input errors") {
    ParabolicProblem p;
    p.terminal = [](double y) { return y; };
    p.reaction = [](double, double) { return NAN; };
    CHECK_THROWS_AS(solve_terminal_parabolic(p, small_grid()), InputError);
}

TEST_CASE("interpolation is exact at nodes and reproduces quadratics") {
    const auto g = small_grid();
    FieldSurface lin(g), quad(g);
    for (std::size_t n = 0; n < g.nt; ++n)
        for (std::size_t i = 0; i < g.ny; ++i) {
            lin(i, n) = g.y(i);
            quad(i, n) = g.y(i) * g.y(i);
        }
    CHECK(lin.eval(g.y(17), g.t(3)) == lin(17, 3));
    const double mid = 0.5 * (g.y(60) + g.y(61));
    CHECK(std::abs(lin.eval(mid, 0.5) - mid) < 1e-12);
    CHECK(std::abs(quad.eval(mid, 0.37) - mid * mid) < 1e-10);
    CHECK_THROWS_AS(lin.eval(6.5, 0.5), RangeError);
    CHECK_THROWS_AS(lin.eval(0.0, 1.5), RangeError);
}

TEST_CASE("fd_residual is small on caloric fields and localizes perturbations") {
    const auto g = small_grid();
    FieldSurface f(g);
    for (std::size_t n = 0; n < g.nt; ++n)
        for (std::size_t i = 0; i < g.ny; ++i) f(i, n) = g.y(i) * g.y(i) + g.T - g.t(n);
    ParabolicProblem heat;
    CHECK(fd_residual(f, heat).max_abs < 1e-9);
    f(40, 50) += 1e-3;
    const auto rep = fd_residual(f, heat);
    CHECK(rep.max_abs > 1e-2);
    CHECK(std::abs(static_cast<int>(rep.i) - 40) <= 1);
    CHECK(std::abs(static_cast<int>(rep.n) - 50) <= 1);
}

TEST_CASE("monotone_invert examples") {
    CHECK(monotone_invert([](double x) { return x * x * x; }, 8.0, 0.0, 5.0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(monotone_invert([](double x) { return x - 0.5 * x; }, 3.0, -100.0, 100.0) ==
          doctest::Approx(6.0).epsilon(1e-12));
    CHECK(std::abs(monotone_invert([](double x) { return std::sinh(x); }, 0.0, -3.0, 2.0)) < 1e-14);
    try {
        monotone_invert([](double x) { return x; }, 5.0, 0.0, 1.0);
        FAIL("expected a bracket error");
    } catch (const BracketError& e) {
        CHECK(e.f_lo == 0.0);
        CHECK(e.f_hi == 1.0);
    }
}

TEST_CASE("monotone_invert round trip on random monotone functions") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.1, 2.0);
    std::uniform_real_distribution<double> X(-3.0, 3.0);
    for (int k = 0; k < 100; ++k) {
        const double a = U(rng), b = U(rng), c = U(rng);
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        auto f = [=](double x) { return sign * (a * x + b * std::tanh(c * x) + 0.1 * x * x * x); };
        const double x0 = X(rng);
        const double x = monotone_invert(f, f(x0), -4.0, 4.0);
        CHECK(std::abs(f(x) - f(x0)) <= 1e-9 * (1.0 + std::abs(f(x0))));
        CHECK(std::abs(x - x0) < 1e-9);
    }
}
