#include <cmath>
#include <vector>

#include "doctest.h"
#include "mfgpi/errors.hpp"
#include "mfgpi/utility.hpp"

using namespace mfgpi;

namespace {

std::vector<double> log_probes(int count, double lo, double hi) {
    std::vector<double> z;
    for (int k = 0; k < count; ++k) z.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k / (count - 1)));
    return z;
}

const Cmim kSinhMeasure{{{1.0, 0.5}, {-1.0, -0.5}}};

}  // namespace

TEST_CASE("risk tolerance examples") {
    CHECK(risk_tolerance(Exponential{1.0}, -4.2) == 1.0);
    CHECK(risk_tolerance(Sahara{1, 1}, 0.0) == 1.0);
    CHECK(risk_tolerance(Sahara{1, 1}, 3.0) == doctest::Approx(std::sqrt(10.0)).epsilon(1e-15));
    CHECK(risk_tolerance(kSinhMeasure, 3.0) == doctest::Approx(std::sqrt(10.0)).epsilon(1e-12));
}

TEST_CASE("risk tolerance matches -J'/J'' for closed forms") {
    for (const UtilitySpec& u : {UtilitySpec{Exponential{2.0}}, UtilitySpec{Sahara{0.5, 3.0}},
                                 UtilitySpec{Sahara{2.0, 0.7}}, UtilitySpec{kSinhMeasure}}) {
        for (double x : {-3.0, -0.4, 0.0, 1.3, 5.0}) {
            CHECK(risk_tolerance(u, x) ==
                  doctest::Approx(-marginal_utility(u, x) / utility_second(u, x)).epsilon(1e-10));
            // J' agrees with a finite difference of J.
            const double h = 1e-4 * std::max(1.0, std::abs(x));
            const double fd = (utility_J(u, x + h) - utility_J(u, x - h)) / (2 * h);
            CHECK(marginal_utility(u, x) == doctest::Approx(fd).epsilon(1e-7));
        }
    }
}

TEST_CASE("custom degenerate curvature is reported") {
    Custom c{[](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; }, {}};
    CHECK_THROWS_AS(risk_tolerance(c, 0.0), NumericalError);
}

TEST_CASE("inverse marginal examples") {
    CHECK(inverse_marginal(Exponential{1.0}, 1.0) == 0.0);
    CHECK(inverse_marginal(Exponential{1.0}, std::exp(-2.0)) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(inverse_marginal(Exponential{1.0}, 0.0), InputError);
    CHECK_THROWS_AS(inverse_marginal(Sahara{1, 1}, -1.0), InputError);
    for (double z : {0.01, 0.3, 1.0, 2.5, 40.0}) {
        const UtilitySpec s = Sahara{1, 1};
        const double x = inverse_marginal(s, z);
        CHECK(marginal_utility(s, x) == doctest::Approx(z).epsilon(1e-10));
    }
}

TEST_CASE("sahara inverse marginal against bisection and an r-ODE integration") {
    const UtilitySpec s = Sahara{1, 1};
    for (double z : {0.05, 0.5, 2.0, 9.0}) {
        // Bisection on J'.
        double lo = -50, hi = 50;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (marginal_utility(s, mid) > z ? lo : hi) = mid;
        }
        CHECK(inverse_marginal(s, z) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-10));
        // d ln J'/dx = -1/r: integrate x as a function of l = ln J' by RK4 from x(0) = 0.
        double x = 0.0;
        const double target = std::log(z);
        const int steps = 20000;
        const double dl = target / steps;
        for (int k = 0; k < steps; ++k) {
            auto f = [](double xx) { return -std::sqrt(xx * xx + 1.0); };  // dx/dl = -r(x)
            const double k1 = f(x), k2 = f(x + 0.5 * dl * k1), k3 = f(x + 0.5 * dl * k2), k4 = f(x + dl * k3);
            x += dl * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0;
        }
        CHECK(inverse_marginal(s, z) == doctest::Approx(x).epsilon(1e-9));
    }
}

TEST_CASE("terminal H examples and monotonicity") {
    CHECK(terminal_H(Exponential{1.0}, 2.0) == 2.0);
    CHECK(terminal_H(Sahara{1, 1}, 0.0) == 0.0);
    CHECK(terminal_H(kSinhMeasure, 1.0) == doctest::Approx(std::sinh(1.0)).epsilon(1e-14));
    CHECK_THROWS_AS(terminal_H(Exponential{1.0}, 1e6), RangeError);
    for (const UtilitySpec& u : {UtilitySpec{Exponential{0.7}}, UtilitySpec{Sahara{0.5, 2.0}}, UtilitySpec{kSinhMeasure}}) {
        double prev = terminal_H(u, -8.0);
        for (int k = 1; k <= 160; ++k) {
            const double z = -8.0 + 0.1 * k;
            const double v = terminal_H(u, z);
            CHECK(v > prev);
            prev = v;
            // H_z(z, T) = r(H(z, T)).
            const double h = 1e-5;
            const double fd = (terminal_H(u, z + h) - terminal_H(u, z - h)) / (2 * h);
            CHECK(terminal_H_z(u, z) == doctest::Approx(fd).epsilon(1e-7));
        }
    }
}

TEST_CASE("cmim terminal data matches the inverse marginal") {
    const Cmim three{{{1.0, 0.3}, {0.5, 0.2}, {-1.5, -0.4}}};
    validate_utility(three);
    for (int k = -40; k <= 40; ++k) {
        const double z = 0.1 * k;
        CHECK(std::abs(terminal_H(three, z) - inverse_marginal(three, std::exp(-z))) <= 1e-9);
    }
}

TEST_CASE("cmim sinh measure reproduces the sahara unit utility") {
    const UtilitySpec c = kSinhMeasure, s = Sahara{1, 1};
    for (double x : {-4.0, -1.0, 0.0, 0.5, 3.0}) {
        CHECK(marginal_utility(c, x) == doctest::Approx(marginal_utility(s, x)).epsilon(1e-12));
        // J agrees up to the additive constant J_cmim(0) - J_sahara(0) = -1/4.
        CHECK(utility_J(c, x) - utility_J(s, x) == doctest::Approx(-0.25).epsilon(1e-10));
    }
}

TEST_CASE("marginal identities") {
    const auto probes = log_probes(50, 1e-3, 1e3);
    const auto expo = check_marginal_identities(Exponential{1.0}, probes);
    CHECK(expo.ok());
    CHECK(expo.max_violation < 1e-8);
    const auto sah = check_marginal_identities(Sahara{1, 1}, probes);
    CHECK(sah.ok());
    CHECK(sah.max_violation < 1e-7);
    CHECK(check_marginal_identities(Sahara{0.3, 2.0}, probes).ok());
    CHECK(check_marginal_identities(kSinhMeasure, probes).ok());

    // Convex on x > 1: J'' changes sign, so the probes that land there are flagged.
    Custom bad{[](double x) { return x + std::pow(std::max(x - 1.0, 0.0), 3); },
               [](double x) { return 1.0 + 3.0 * std::pow(std::max(x - 1.0, 0.0), 2); },
               [](double x) { return x > 1.0 ? 6.0 * (x - 1.0) : -std::exp(-x * x); },
               [](double z) { return std::log(1.0 / z) + 1.5; }};
    const auto rep = check_marginal_identities(bad, {0.1, 0.5});
    CHECK_FALSE(rep.ok());
    CHECK(rep.flagged.size() >= 1);
    CHECK_THROWS_AS(validate_utility(bad), InputError);
}

TEST_CASE("utility constants bound the risk tolerance") {
    for (const UtilitySpec& u : {UtilitySpec{Exponential{1.0}}, UtilitySpec{Sahara{1, 1}}, UtilitySpec{Sahara{0.4, 2.5}},
                                 UtilitySpec{kSinhMeasure}}) {
        const auto c = utility_constants(u);
        for (int k = -100; k <= 100; ++k) {
            const double x = 0.2 * k;
            const double r = risk_tolerance(u, x);
            CHECK(r >= c.r_min - 1e-12);
            CHECK(r <= std::sqrt(c.A * x * x + c.B) + 1e-9);
            const double h = 1e-5;
            CHECK(std::abs(risk_tolerance(u, x + h) - risk_tolerance(u, x - h)) / (2 * h) <= c.r_slope + 1e-6);
        }
    }
    const auto s = utility_constants(Sahara{2.0, 3.0});
    CHECK(s.A == 2.0);
    CHECK(s.B == 3.0);
    CHECK(utility_constants(Sahara{0.25, 1.0}).r_slope == 0.5);
    // r^2 - A x^2 = B identically.
    for (double x : {-5.0, 0.0, 7.0}) CHECK(std::pow(risk_tolerance(Sahara{2, 3}, x), 2) - 2 * x * x == doctest::Approx(3.0));
}

TEST_CASE("invalid utilities") {
    CHECK_THROWS_AS(validate_utility(Exponential{0.0}), InputError);
    CHECK_THROWS_AS(validate_utility(Sahara{-1, 1}), InputError);
    CHECK_THROWS_AS(validate_utility(Cmim{}), InputError);
    CHECK_THROWS_AS(validate_utility(Cmim{{{1.0, 1.0}}}), InputError);
}
