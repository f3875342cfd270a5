#include <cmath>

#include "doctest.h"
#include "mfgpi/errors.hpp"
#include "mfgpi/paths.hpp"

using namespace mfgpi;

namespace {

SpaceTimeGrid market_grid() {
    SpaceTimeGrid g;
    g.ny = 241;
    g.nt = 201;
    return g;
}

std::shared_ptr<const MarketModel> dirac_market() {
    static auto m = std::make_shared<const MarketModel>(build_market(PriorMeasure::dirac(0.5), market_grid()));
    return m;
}

std::shared_ptr<const MarketModel> two_point_market() {
    static auto m = std::make_shared<const MarketModel>(
        build_market(PriorMeasure::from_atoms({{0.2, 0.5}, {0.8, 0.5}}), market_grid()));
    return m;
}

}  // namespace

TEST_CASE("exponential wealth is x0 plus L pathwise") {
    const auto s = build_H_surface(Exponential{1.0}, two_point_market());
    SimulationRequest r;
    r.x0 = 0.3;
    r.n_paths = 50;
    r.n_steps = 40;
    r.record_stride = 4;
    const auto b = simulate_paths(s, r);
    CHECK(b.excluded == 0);
    for (std::size_t p = 0; p < b.n_paths; ++p)
        for (std::size_t k = 0; k < b.n_records(); ++k)
            CHECK(std::abs(b.at(b.X, p, k) - (0.3 + b.at(b.L, p, k))) < 1e-12);
}

TEST_CASE("zero-length horizon") {
    const auto s = build_H_surface(Exponential{1.0}, dirac_market());
    SimulationRequest r;
    r.x0 = 0.7;
    r.t0 = 1.0;
    r.n_paths = 5;
    const auto b = simulate_paths(s, r);
    CHECK(b.n_records() == 1);
    CHECK(b.terminal(b.X, 3) == 0.7);
    CHECK(b.terminal(b.L, 3) == 0.0);
    const auto v = estimate_value(b, Exponential{1.0});
    CHECK(v.mean == doctest::Approx(-std::exp(-0.7)).epsilon(1e-15));
    CHECK(v.std_error == 0.0);
}

TEST_CASE("dirac exponential terminal wealth is gaussian") {
    const auto s = build_H_surface(Exponential{1.0}, dirac_market());
    SimulationRequest r;
    r.n_paths = 20000;
    r.n_steps = 20;
    r.t0 = 0.2;
    const auto b = simulate_paths(s, r);
    std::vector<double> x, sq;
    for (std::size_t p = 0; p < b.n_paths; ++p) x.push_back(b.terminal(b.X, p));
    const auto e = estimate_mean(x);
    const double mean = 0.25 * 0.8, var = 0.25 * 0.8;
    CHECK(std::abs(e.mean - mean) <= 3 * e.std_error);
    for (double v : x) sq.push_back((v - mean) * (v - mean));
    const auto ev = estimate_mean(sq);
    CHECK(std::abs(ev.mean - var) <= 3 * ev.std_error);
}

TEST_CASE("exponential value against the closed form") {
    for (const auto& market : {dirac_market(), two_point_market()}) {
        const auto s = build_H_surface(Exponential{1.0}, market);
        SimulationRequest r;
        r.x0 = 0.1;
        r.y0 = 0.2;
        r.n_paths = 20000;
        r.n_steps = 100;
        r.seed = 11;
        const auto v = estimate_value(simulate_paths(s, r), Exponential{1.0});
        const double exact = -std::exp(-0.1 + market->k.eval(0.2, 0.0));
        CHECK(std::abs(v.mean - exact) <= 3 * v.std_error);
    }
}

TEST_CASE("streams do not depend on the number of paths") {
    const auto s = build_H_surface(Sahara{1, 1}, two_point_market());
    SimulationRequest r;
    r.n_paths = 10;
    r.n_steps = 20;
    const auto a = simulate_paths(s, r);
    r.n_paths = 25;
    const auto b = simulate_paths(s, r);
    for (std::size_t p = 0; p < 10; ++p) CHECK(a.terminal(a.X, p) == b.terminal(b.X, p));
    const auto c = simulate_paths(s, r);
    for (std::size_t p = 0; p < 25; ++p) CHECK(c.terminal(c.X, p) == b.terminal(b.X, p));
}

TEST_CASE("wealth is a martingale under the risk-neutral measure") {
    const auto s = build_H_surface(Sahara{1, 1}, two_point_market());
    SimulationRequest r;
    r.x0 = 0.5;
    r.n_paths = 20000;
    r.n_steps = 50;
    r.record_stride = 10;
    r.measure = Measure::RiskNeutral;
    const auto b = simulate_paths(s, r);
    CHECK(b.excluded == 0);
    for (std::size_t k = 1; k < b.n_records(); ++k) {
        std::vector<double> x;
        for (std::size_t p = 0; p < b.n_paths; ++p) x.push_back(b.at(b.X, p, k));
        const auto e = estimate_mean(x);
        CHECK(std::abs(e.mean - 0.5) <= 3 * e.std_error);
    }
    CHECK(std::isfinite(b.admissibility().mean));
}

TEST_CASE("auxiliary value matches u F") {
    const auto s = build_H_surface(Exponential{1.0}, dirac_market());
    const double x = 0.2, y = 0.1, t = 0.3;
    const auto w = auxiliary_value_w(s, x, y, t, 20000, 5);
    const double exact = -std::exp(-x + dirac_market()->k.eval(y, t)) * eval_F(dirac_market()->prior, y, t);
    // Each sample equals -e^{-z0} here, so the spread is roundoff.
    CHECK(std::abs(w.mean - exact) <= 3 * w.std_error + 1e-10);
    const auto wT = auxiliary_value_w(s, x, y, 1.0, 10, 5);
    CHECK(wT.mean == doctest::Approx(-std::exp(-x) * eval_F(dirac_market()->prior, y, 1.0)).epsilon(1e-14));
    CHECK(wT.std_error == 0.0);
}

TEST_CASE("sahara value: step counts, value surface and auxiliary problem agree") {
    const auto s = build_H_surface(Sahara{1, 1}, two_point_market());
    const auto vs = build_value_surface(s);
    SimulationRequest r;
    r.x0 = 0.4;
    r.n_paths = 20000;
    r.n_steps = 50;
    const auto v1 = estimate_value(simulate_paths(s, r), s.utility);
    r.n_steps = 100;
    const auto v2 = estimate_value(simulate_paths(s, r), s.utility);
    CHECK(std::abs(v1.mean - v2.mean) <= 3 * std::hypot(v1.std_error, v2.std_error));
    CHECK(std::abs(v2.mean - vs.u(0.4, 0.0, 0.0)) <= 3 * v2.std_error);
    const auto w = auxiliary_value_w(s, 0.4, 0.0, 0.0, 20000, 9);
    CHECK(std::abs(w.mean - vs.w(0.4, 0.0, 0.0)) <= 3 * w.std_error);
}

TEST_CASE("feynman-kac oracle for H") {
    const auto s = build_H_surface(Sahara{1, 1}, two_point_market());
    std::uint64_t k = 0;
    for (double z : {-1.0, 0.5})
        for (double y : {-0.5, 0.8}) {
            const auto e = feynman_kac_H(s, z, y, 0.2, 20000, 100, 3, k++);
            CHECK(std::abs(e.mean - s.H_composed(z, y, 0.2)) <= 3 * e.std_error);
            CHECK(std::abs(e.mean - s.H(z, y, 0.2)) <= 3 * e.std_error);
        }
}
