#include <cmath>

#include "doctest.h"
#include "mfgpi/errors.hpp"
#include "mfgpi/filter.hpp"

using namespace mfgpi;

TEST_CASE("dirac prior gives a constant posterior mean") {
    const auto p = PriorMeasure::dirac(0.5);
    CHECK(eval_b(p, 3.0, 0.2) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(eval_F(p, 1.0, 1.0) == doctest::Approx(std::exp(0.5 - 0.125)).epsilon(1e-14));
}

TEST_CASE("two-point prior against a direct sum") {
    const auto p = PriorMeasure::from_atoms({{0.2, 0.5}, {0.8, 0.5}});
    const double y = 0.7, t = 0.4;
    const double e1 = 0.5 * std::exp(0.2 * y - 0.02 * t);
    const double e2 = 0.5 * std::exp(0.8 * y - 0.32 * t);
    CHECK(eval_F(p, y, t) == doctest::Approx(e1 + e2).epsilon(1e-14));
    CHECK(eval_b(p, y, t) == doctest::Approx((0.2 * e1 + 0.8 * e2) / (e1 + e2)).epsilon(1e-14));
    // F_y = b F and the finite-difference derivative of F agree.
    const double h = 1e-5;
    const double fd = (eval_F(p, y + h, t) - eval_F(p, y - h, t)) / (2 * h);
    CHECK(eval_F_y(p, y, t) == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("posterior mean saturates without overflow at extreme y") {
    const auto p = PriorMeasure::from_atoms({{0.2, 0.5}, {0.8, 0.5}});
    CHECK(eval_b(p, 2000.0, 1.0) == doctest::Approx(0.8));
    CHECK(eval_b(p, -2000.0, 1.0) == doctest::Approx(0.2));
    CHECK(std::isfinite(eval_log_F(p, 2000.0, 1.0)));
    CHECK_THROWS_AS(eval_F(p, 2000.0, 1.0), RangeError);
}

TEST_CASE("invalid priors are rejected") {
    CHECK_THROWS_AS(PriorMeasure::from_atoms({{0.2, 0.5}, {0.8, 0.6}}), InputError);
    CHECK_THROWS_AS(PriorMeasure::from_atoms({{-0.2, 1.0}}), InputError);
    CHECK_THROWS_AS(PriorMeasure::from_atoms({}), InputError);
    CHECK_THROWS_AS(eval_b(PriorMeasure::dirac(0.5), 0.0, -1.0), InputError);
}

TEST_CASE("filter surface invariants on the default grid") {
    const auto p = PriorMeasure::from_atoms({{0.2, 0.25}, {0.5, 0.25}, {0.8, 0.5}});
    SpaceTimeGrid g;
    g.ny = 241;
    g.nt = 51;
    const auto fs = build_filter_surface(p, g);
    for (std::size_t n = 0; n < g.nt; ++n)
        for (std::size_t i = 1; i < g.ny; ++i) {
            CHECK(fs.b(i, n) >= fs.b(i - 1, n));
            CHECK(fs.F(i, n) > 0.0);
        }
    // Terminal b slope is bounded by theta_max^2 - theta_min^2 (posterior variance bound).
    double max_slope = 0.0;
    for (std::size_t i = 1; i < g.ny; ++i)
        max_slope = std::max(max_slope, (fs.b(i, g.nt - 1) - fs.b(i - 1, g.nt - 1)) / g.dy());
    CHECK(max_slope <= 0.8 * 0.8 - 0.2 * 0.2);
}
