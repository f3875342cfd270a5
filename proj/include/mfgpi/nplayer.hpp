#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mfgpi/mfg.hpp"

namespace mfgpi {

struct EnsembleRequest {
    std::size_t N = 10;
    // Initial wealths are drawn i.i.d. from these (wealth, weight) atoms.
    std::vector<std::pair<double, double>> atoms{{0.0, 1.0}};
    double y0 = 0.0;
    double t0 = 0.0;
    std::size_t n_steps = 50;
    std::uint64_t seed = 1;
    std::uint64_t replication = 0;
    double scale = 1.0;      // every player runs scale * feedback
    double deviation = 0.0;  // constant added to player 0's control
};

// One draw of the N-player game. All players see the same W and Y arrays
// (common noise only) and integrate dX^i = pi^i (b ds + dW) by Euler steps.
struct PlayerEnsemble {
    std::size_t N = 0;
    std::vector<double> times;
    std::vector<double> W;   // common noise path
    std::vector<double> Y;   // factor path
    std::vector<double> x0;  // initial wealths
    std::vector<double> XT;  // terminal wealths
    std::vector<double> loo_mean_T;  // mean of the other players' terminal wealth
    double mbar0 = 0.0;              // mean of the atoms
    // Mean-field reference Xbar*_T from mbar0 with the same steps and noise (NaN for single-agent runs).
    double reference_mean_T = 0.0;
};

// Players use pi*(Y_s, leave-one-out mean at s, s) from the mean-field solution.
PlayerEnsemble simulate_ensemble(const MfgSolution& sol, const EnsembleRequest& request);
// Players use the single-agent feedback alpha*(X^i_s, Y_s, s). Each wealth follows
// H(H^{-1}(x^i) + L_s, Y_s, s) with L from the same recurrence as simulate_paths, so replication r
// reproduces path r of simulate_paths from the same seed. scale and deviation must be 1 and 0.
PlayerEnsemble simulate_ensemble(const HSurface& single, const EnsembleRequest& request);

// Payoff of player i: J(X^i_T - C(leave-one-out mean)) with J(x) = -e^{-x}.
double player_payoff(const MfgSolution& sol, const PlayerEnsemble& e, std::size_t i);

struct ConvergenceRow {
    std::size_t N = 0;
    ValueEstimate gap;  // |leave-one-out mean of player 0 - Xbar*_T|
    std::size_t excluded = 0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    double slope = 0.0;  // least-squares slope of log gap against log N
};

struct ConvergenceRequest {
    std::vector<std::size_t> N_list{10, 100, 1000, 10000};
    std::size_t replications = 200;
    std::vector<std::pair<double, double>> atoms;
    double y0 = 0.0;
    double t0 = 0.0;
    std::size_t n_steps = 50;
    std::uint64_t seed = 1;
    unsigned threads = 1;  // replications are split over threads; results do not depend on it
};

// InputError unless N_list is strictly increasing, has >= 3 values and spans >= 2 decades.
ConvergenceReport convergence_study(const MfgSolution& sol, const ConvergenceRequest& request);

struct DeviationRow {
    double delta = 0.0;
    ValueEstimate gain;  // paired difference of player 0's payoff, deviated minus baseline
};

struct DeviationReport {
    ValueEstimate baseline;
    std::vector<DeviationRow> rows;
    double max_gain = 0.0;
    double max_gain_std_error = 0.0;
    double argmax_delta = 0.0;
};

struct NashRequest {
    std::size_t N = 50;
    std::vector<double> deltas{-0.2, -0.1, -0.05, 0.0, 0.05, 0.1, 0.2};
    std::size_t n_paths = 2000;
    std::vector<std::pair<double, double>> atoms{{0.0, 1.0}};
    double y0 = 0.0;
    double t0 = 0.0;
    std::size_t n_steps = 50;
    std::uint64_t seed = 1;
    double scale = 1.0;  // baseline control is scale * pi*
    unsigned threads = 1;
};

// Player 0 shifts its control by each delta while the others hold the baseline.
// Every delta reuses the same noise and initial wealths as the baseline.
DeviationReport nash_gap(const MfgSolution& sol, const NashRequest& request);

// Uniform atoms on [lo, hi] with equal weights.
std::vector<std::pair<double, double>> uniform_atoms(double lo, double hi, std::size_t n);

}  // namespace mfgpi
