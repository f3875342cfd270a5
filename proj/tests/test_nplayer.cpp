#include <cmath>

#include "doctest.h"
#include "mfgpi/errors.hpp"
#include "mfgpi/nplayer.hpp"

using namespace mfgpi;

namespace {

SpaceTimeGrid coarse_grid() {
    SpaceTimeGrid g;
    g.ny = 241;
    g.nt = 201;
    return g;
}

MfgGrid coarse_mfg_grid() {
    MfgGrid g = default_mfg_grid(coarse_grid());
    g.mbar.n = 81;
    return g;
}

std::shared_ptr<const MarketModel> dirac_market() {
    static auto m = std::make_shared<const MarketModel>(build_market(PriorMeasure::dirac(0.5), coarse_grid()));
    return m;
}

std::shared_ptr<const MarketModel> two_point_market() {
    static auto m = std::make_shared<const MarketModel>(
        build_market(PriorMeasure::from_atoms({{0.2, 0.5}, {0.8, 0.5}}), coarse_grid()));
    return m;
}

const MfgSolution& dirac_linear() {
    static const MfgSolution s = build_mfg(LinearCoupling{0.5}, dirac_market(), coarse_mfg_grid());
    return s;
}

const MfgSolution& two_point_linear() {
    static const MfgSolution s = build_mfg(LinearCoupling{0.5}, two_point_market(), coarse_mfg_grid());
    return s;
}

}  // namespace

TEST_CASE("two players from one start stay identical") {
    EnsembleRequest r;
    r.N = 2;
    r.atoms = {{0.3, 1.0}};
    r.n_steps = 40;
    const auto e = simulate_ensemble(two_point_linear(), r);
    CHECK(e.XT[0] == e.XT[1]);
    CHECK(e.loo_mean_T[0] == e.XT[1]);
}

TEST_CASE("constant feedback integrates exactly") {
    const auto& sol = dirac_linear();
    const double c = sol.market->c.eval(0.0, 0.0);
    const double b = 0.5;
    EnsembleRequest r;
    r.N = 7;
    r.atoms = uniform_atoms(-1, 1, 5);
    r.t0 = 0.25;
    r.n_steps = 30;
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
        r.replication = rep;
        const auto e = simulate_ensemble(sol, r);
        const double WT = e.W.back();
        for (std::size_t i = 0; i < r.N; ++i)
            CHECK(std::abs(e.XT[i] - (e.x0[i] + c / 0.5 * (b * 0.75 + WT))) < 1e-8);
    }
}

TEST_CASE("single-agent strategy reproduces simulate_paths") {
    const auto s = build_H_surface(Sahara{1, 1}, two_point_market());
    EnsembleRequest r;
    r.N = 3;
    r.atoms = {{0.7, 1.0}};
    r.y0 = 0.2;
    r.n_steps = 50;
    r.seed = 9;
    SimulationRequest sr;
    sr.x0 = 0.7;
    sr.y0 = 0.2;
    sr.n_paths = 4;
    sr.n_steps = 50;
    sr.seed = 9;
    const auto b = simulate_paths(s, sr);
    for (std::uint64_t p = 0; p < 4; ++p) {
        r.replication = p;
        const auto e = simulate_ensemble(s, r);
        CHECK(std::abs(e.W.back() - b.terminal(b.W, p)) < 1e-14);
        CHECK(std::abs(e.Y.back() - b.terminal(b.Y, p)) < 1e-14);
        for (double x : e.XT) CHECK(std::abs(x - b.terminal(b.X, p)) < 1e-12);
    }
    r.scale = 2.0;
    CHECK_THROWS_AS(simulate_ensemble(s, r), InputError);
}

TEST_CASE("zero coupling reduces to independent single agents") {
    const auto sol = build_mfg(zero_coupling(), dirac_market(), coarse_mfg_grid());
    const auto s = build_H_surface(Exponential{1.0}, dirac_market());
    EnsembleRequest r;
    r.N = 5;
    r.atoms = uniform_atoms(-1, 1, 3);
    r.n_steps = 25;
    for (std::uint64_t rep = 0; rep < 3; ++rep) {
        r.replication = rep;
        const auto a = simulate_ensemble(sol, r);
        const auto b = simulate_ensemble(s, r);
        for (std::size_t i = 0; i < r.N; ++i) {
            CHECK(a.x0[i] == b.x0[i]);
            CHECK(std::abs(a.XT[i] - b.XT[i]) < 1e-10);
        }
    }
}

TEST_CASE("ensemble input errors") {
    EnsembleRequest r;
    r.N = 1;
    CHECK_THROWS_AS(simulate_ensemble(dirac_linear(), r), InputError);
    r.N = 3;
    r.atoms.clear();
    CHECK_THROWS_AS(simulate_ensemble(dirac_linear(), r), InputError);
    ConvergenceRequest c;
    c.atoms = {{0.0, 1.0}};
    c.N_list = {10, 20, 50};
    CHECK_THROWS_AS(convergence_study(dirac_linear(), c), InputError);
    c.N_list = {10, 1000, 100};
    CHECK_THROWS_AS(convergence_study(dirac_linear(), c), InputError);
}

TEST_CASE("degenerate initial law gives no gap") {
    ConvergenceRequest c;
    c.N_list = {10, 100, 1000};
    c.replications = 10;
    c.atoms = {{0.4, 1.0}};
    c.n_steps = 10;
    const auto rep = convergence_study(two_point_linear(), c);
    for (const auto& row : rep.rows) {
        CHECK(row.excluded == 0);
        CHECK(row.gap.mean < 1e-12);
    }
}

TEST_CASE("empirical mean converges at the CLT rate") {
    ConvergenceRequest c;
    c.N_list = {10, 100, 1000};
    c.replications = 100;
    c.atoms = uniform_atoms(-1, 1, 201);
    c.n_steps = 10;
    const auto rep = convergence_study(two_point_linear(), c);
    MESSAGE("slope " << rep.slope);
    CHECK(rep.slope >= -0.65);
    CHECK(rep.slope <= -0.35);

    c.threads = 3;
    const auto again = convergence_study(two_point_linear(), c);
    for (std::size_t k = 0; k < rep.rows.size(); ++k) CHECK(again.rows[k].gap.mean == rep.rows[k].gap.mean);

    c.threads = 1;
    c.N_list = {10, 100, 1000};
    c.replications = 400;
    const auto more = convergence_study(two_point_linear(), c);
    const double ratio = rep.rows[0].gap.std_error / more.rows[0].gap.std_error;
    MESSAGE("stderr ratio for 4x replications " << ratio);
    CHECK(ratio > 1.6);
    CHECK(ratio < 2.4);
}

TEST_CASE("the mean-field control is a finite-N near equilibrium") {
    NashRequest r;
    r.N = 50;
    r.n_paths = 1000;
    r.n_steps = 20;
    r.atoms = uniform_atoms(-1, 1, 21);
    const auto rep = nash_gap(two_point_linear(), r);
    REQUIRE(rep.rows.size() == r.deltas.size());
    for (const auto& row : rep.rows)
        if (row.delta == 0.0) {
            CHECK(row.gain.mean == 0.0);
            CHECK(row.gain.std_error == 0.0);
        }
    MESSAGE("max gain " << rep.max_gain << " stderr " << rep.max_gain_std_error << " at " << rep.argmax_delta);
    CHECK(rep.max_gain <= 2.0 * rep.max_gain_std_error);

    // The sabotage gain is about 2 stderr at 1000 paths, so it is detected on a larger sample.
    r.scale = 1.5;
    r.n_paths = 5000;
    r.n_steps = 10;
    const auto bad = nash_gap(two_point_linear(), r);
    MESSAGE("sabotage gain " << bad.max_gain << " stderr " << bad.max_gain_std_error << " at " << bad.argmax_delta);
    CHECK(bad.max_gain > 3.0 * bad.max_gain_std_error);
    CHECK(bad.argmax_delta < 0.0);

    r.deltas = {0.1, 0.2};
    CHECK_THROWS_AS(nash_gap(two_point_linear(), r), InputError);
}
