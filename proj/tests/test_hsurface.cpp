#include <chrono>
#include <cmath>

#include "doctest.h"
#include "mfgpi/errors.hpp"
#include "mfgpi/hsurface.hpp"
#include "mfgpi/invert.hpp"

using namespace mfgpi;

namespace {

SpaceTimeGrid market_grid() {
    SpaceTimeGrid g;
    g.ny = 241;
    g.nt = 201;
    return g;
}

std::shared_ptr<const MarketModel> two_point_market() {
    static auto m = std::make_shared<const MarketModel>(
        build_market(PriorMeasure::from_atoms({{0.2, 0.5}, {0.8, 0.5}}), market_grid()));
    return m;
}

std::shared_ptr<const MarketModel> dirac_market() {
    static auto m = std::make_shared<const MarketModel>(build_market(PriorMeasure::dirac(0.5), market_grid()));
    return m;
}

}  // namespace

TEST_CASE("exponential h surface is affine") {
    const auto s = build_H_surface(Exponential{1.0}, dirac_market());
    const auto& g = s.hgrid.grid;
    // Terminal z + y b - b^2 T / 2 is affine and caloric, so it holds for all t.
    for (std::size_t p = 0; p < s.hgrid.z.n; p += 40)
        for (std::size_t n = 0; n < g.nt; n += 25)
            for (std::size_t i = 0; i < g.ny; i += 10)
                CHECK(std::abs(s.h(i, n, p) - (s.hgrid.z.at(p) + 0.5 * g.y(i) - 0.125)) < 1e-10);
    CHECK(s.inequalities.ok);
    CHECK(s.H(2.0, 0.3, 0.4) == 2.0);
    CHECK(std::abs(s.H_composed(2.0, 0.3, 0.4) - 2.0) < 1e-6);
    CHECK(feedback_control(s, 1.7, 0.3, 0.4) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("exponential on the two-point prior") {
    const auto s = build_H_surface(Exponential{1.0}, two_point_market());
    CHECK(s.inequalities.ok);
    for (double y : {-1.0, 0.0, 1.5})
        for (double t : {0.0, 0.5}) {
            CHECK(std::abs(s.H_composed(0.7, y, t) - 0.7) < 1e-4);
            CHECK(feedback_control(s, 0.7, y, t) == doctest::Approx(s.market->c.eval(y, t)).epsilon(1e-12));
            CHECK(std::abs(s.alpha_tilde(0.7, y, t) - s.market->c.eval(y, t)) < 1e-4);
        }
}

TEST_CASE("sahara with a dirac prior has the sinh closed form") {
    const auto s = build_H_surface(Sahara{1, 1}, dirac_market());
    CHECK(s.inequalities.ok);
    for (double z : {-2.0, -0.5, 0.0, 1.0, 2.5})
        for (double t : {0.0, 0.3, 0.9}) {
            const double e = std::exp(0.125 * (1.0 - t));
            CHECK(std::abs(s.H(z, 0.4, t) - std::sinh(z) * e) < 1e-6 * (1 + std::abs(std::sinh(z))));
            CHECK(std::abs(s.H_composed(z, 0.4, t) - std::sinh(z) * e) < 1e-4 * (1 + std::abs(std::sinh(z))));
            const double x = std::sinh(z) * e;
            CHECK(std::abs(feedback_control(s, x, 0.4, t) - 0.5 * std::cosh(z) * e) < 1e-5 * std::cosh(z));
        }
}

TEST_CASE("sahara inversion and round trips on the two-point prior") {
    const auto s = build_H_surface(Sahara{1, 1}, two_point_market());
    CHECK(s.inequalities.ok);
    for (double y : {-1.5, 0.0, 1.2})
        for (double t : {0.0, 0.45, 1.0})
            for (double x : {-20.0, -1.0, 0.0, 0.3, 4.0, 50.0}) {
                const double z = s.H_inverse(x, y, t);
                CHECK(std::abs(s.H(z, y, t) - x) <= 1e-8 * (1 + std::abs(x)));
                const double zb = monotone_invert([&](double q) { return s.H(q, y, t); }, x, -30.0, 30.0);
                CHECK(std::abs(z - zb) < 1e-10);
                const double zc = s.H_inverse_composed(x, y, t);
                CHECK(std::abs(s.H_composed(zc, y, t) - x) <= 1e-8 * (1 + std::abs(x)));
                CHECK(std::abs(zc - z) < 1e-3);
            }
}

TEST_CASE("feedback bounds on a probe lattice") {
    const auto s = build_H_surface(Sahara{1, 1}, two_point_market());
    const double th2 = 0.8, A = s.bound_A(), B = s.constants.B;
    for (double y : {-1.5, -0.5, 0.5, 1.5})
        for (double t : {0.0, 0.5, 0.9})
            for (double x = -5.0; x <= 5.0; x += 0.5) {
                const double a = feedback_control(s, x, y, t);
                CHECK(a > 0.0);
                CHECK(a <= th2 * std::sqrt(A * x * x + B * std::exp(A * (1.0 - t))) + 1e-9);
                const double dx = 1e-4;
                const double ax = (feedback_control(s, x + dx, y, t) - feedback_control(s, x - dx, y, t)) / (2 * dx);
                CHECK(ax <= th2 * A + 1e-6);
                CHECK(std::abs(s.alpha_tilde(x, y, t) - a) < 1e-3 * (1 + std::abs(a)));
            }
}

TEST_CASE("wealth queries outside the attainable window are range errors") {
    const auto s = build_h_surface(Sahara{1, 1}, two_point_market());
    const auto [lo, hi] = s.wealth_window(0.0, 0.5);
    CHECK_THROWS_AS(s.H_inverse(hi + 1.0, 0.0, 0.5), RangeError);
    CHECK_THROWS_AS(s.H_inverse(lo - 1.0, 0.0, 0.5), RangeError);
}
