#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mfgpi/hsurface.hpp"
#include "mfgpi/paths.hpp"
#include "mfgpi/residuals.hpp"

namespace mfgpi {

// Coupling C(m) = theta * mean(m).
struct LinearCoupling {
    double theta = 0.5;
};

// Coupling through the mean only, C(m) = C(mean(m)), with
// k1 < 1 - C'(z) < k2 and (z - C(z))^{-1}(v) <= K e^{L v^2}.
struct GeneralMeanCoupling {
    std::string name;
    std::function<double(double)> C;
    std::function<double(double)> C1;  // C'
    double k1 = 0.0;
    double k2 = 0.0;
    double K = 1.0;
    double L = 1.0;
};

using CouplingSpec = std::variant<LinearCoupling, GeneralMeanCoupling>;

// Catalogue entries.
GeneralMeanCoupling zero_coupling();
GeneralMeanCoupling linear_mean_coupling(double theta);
// C(z) = a z + b tanh z.
GeneralMeanCoupling linear_plus_tanh(double a, double b, double k1, double k2);

// Throws InputError: theta outside (0,1), C(0) != 0, or the slope bounds failing on probes in [-20, 20].
void validate_coupling(const CouplingSpec& coupling);
// Linear couplings are turned into the general form so both go through one pipeline.
GeneralMeanCoupling as_general_mean(const CouplingSpec& coupling);
double coupling_value(const CouplingSpec& coupling, double mbar);

struct MfgGrid {
    SpaceTimeGrid grid;
    Axis mbar{-4.0, 4.0, 161};
};

// Every other market node in y and t; mbar on [-4, 4] with 161 nodes.
MfgGrid default_mfg_grid(const SpaceTimeGrid& market_grid);

// q(y,t) = -1/2 int_0^t c_y(0,s) ds + int_0^y c(rho,t) d rho (the integral is signed, so
// the three branches at y > 0, y = 0, y < 0 are one expression), by quadrature of c.
double q_formula(const MarketModel& market, double y, double t);
// q on `grid`: q(., T) from the formula, propagated by the heat equation (q is caloric).
FieldSurface build_q(const MarketModel& market, const SpaceTimeGrid& grid);

struct MfgSolution {
    std::shared_ptr<const MarketModel> market;
    GeneralMeanCoupling coupling;
    SpaceTimeGrid grid;
    Axis mbar;
    Axis w;  // axis of the g family

    FieldSurface q;
    // g(y,w,t): heat solve per w with g(y,w,T) = (z - C(z) - q(y,T))^{-1}(w).
    FieldSurface g;
    // f(y,mbar,t) = mbar - g(y,.,t)^{-1}(mbar) - q(y,t) and its partials.
    FieldSurface f;
    FieldSurface f_y;
    FieldSurface f_m;

    double q_mismatch = 0.0;         // max |q - q_formula| on probes of the interior third
    double terminal_mismatch = 0.0;  // max |f(y,mbar,T) - C(mbar)| before the terminal slice is imposed
    double min_g_w = 0.0;            // min forward-difference slope of g in w
    double min_one_minus_f_m = 0.0;  // over all nodes
    ResidualReport f_residual;

    double eval_f(double y, double mbar, double t) const { return f.eval(y, t, mbar); }
    double eval_f_y(double y, double mbar, double t) const { return f_y.eval(y, t, mbar); }
    double eval_f_m(double y, double mbar, double t) const { return f_m.eval(y, t, mbar); }
    // (f_y + c) / (1 - f_m); NumericalError if the denominator is not positive.
    double pi_star(double y, double mbar, double t) const;
    // G(y,v,t) = (. - f(y,.,t))^{-1}(v) = g(y, v - q(y,t), t).
    double G(double y, double v, double t) const;
};

// Heat family for g on the w axis. The w range covers mbar - C(mbar) - q(y,T) over the grid with a margin;
// the w spacing is half the mbar spacing, since f comes from interpolating g in w.
// Throws RangeError citing the (K, L) growth bound when the terminal inversion cannot be bracketed,
// and ConsistencyError when g is not increasing in w.
FieldSurface build_g(const GeneralMeanCoupling& coupling, const MarketModel& market, const FieldSurface& q,
                     const SpaceTimeGrid& grid, const Axis& mbar, Axis& w_out);

// Full pipeline. Throws ConsistencyError if 1 - f_m <= 0 at some node.
MfgSolution build_mfg(const CouplingSpec& coupling, std::shared_ptr<const MarketModel> market, const MfgGrid& grid);
MfgSolution build_mfg(const CouplingSpec& coupling, std::shared_ptr<const MarketModel> market);

double equilibrium_control_expo(const MfgSolution& sol, double y, double mbar, double t);
// -exp(-(x - f(y,mbar,t)) + k(y,t)).
double mfg_value_expo(const MfgSolution& sol, double x, double y, double mbar, double t);

struct EquilibriumRequest {
    double x0 = 0.0;
    double mbar0 = 0.0;
    double y0 = 0.0;
    double t0 = 0.0;
    std::size_t n_paths = 1000;
    std::size_t n_steps = 100;
    std::uint64_t seed = 1;
    Measure measure = Measure::Physical;
    std::size_t record_stride = 0;
    // Largest accepted |Xbar_sde - Xbar| at the horizon; ConsistencyError beyond it.
    double route_tolerance = INFINITY;
};

// paths.X holds X*, paths.alpha holds pi*. Xbar is the closed-form route
// G(Y_s, mbar0 - f0 + L_s, s), Xbar_sde the Euler-Maruyama route
// dXbar = pi*(Y, Xbar, s)(b ds + dW). Records needing f outside the mbar
// axis are NaN and the path is flagged in f_valid.
struct EquilibriumBundle {
    PathBundle paths;
    double f0 = 0.0;
    std::vector<double> Xbar;
    std::vector<double> Xbar_sde;
    std::vector<double> coupling_T;  // C(Xbar_T)
    std::vector<std::uint8_t> f_valid;
    std::vector<std::uint8_t> sde_valid;
    // max over paths and records of |X* - f(Y, Xbar) - L - (x0 - f0)|
    double conservation_max = 0.0;
    // mean |Xbar_sde - Xbar| at the horizon over paths where both routes are valid
    ValueEstimate route_gap;
};

EquilibriumBundle simulate_equilibrium_expo(const MfgSolution& sol, const EquilibriumRequest& request);

// Linear coupling with a general utility through the decomposition
// X* = X^{x0 - theta mbar} + theta/(1-theta) sum_j w_j X^{x_j - theta mbar} over the atoms (x_j, w_j).
struct LinearEquilibrium {
    double theta = 0.0;
    double mbar = 0.0;
    PathBundle base;          // single-agent paths from x0 - theta mbar
    std::vector<double> Xbar;  // (1/(1-theta)) sum_j w_j X^{x_j - theta mbar}
    std::vector<double> X;
    std::vector<double> pi;
    ValueEstimate value;  // MC estimate of U = u(x0 - theta mbar, y0, t0)
};

LinearEquilibrium linear_coupling_solution(const HSurface& single, double theta,
                                           const std::vector<std::pair<double, double>>& atoms,
                                           const SimulationRequest& request);

// pi*(x) = alpha*(x - theta mbar) + theta/(1-theta) sum_j w_j alpha*(x_j - theta mbar).
double pi_linear_feedback(const HSurface& single, double theta, const std::vector<std::pair<double, double>>& atoms,
                          double x, double y, double t);

// Exponential case, probes (a = mbar, y, t): pi (1 - f_m) - f_y - c.
ResidualReport optimality_residual(const MfgSolution& sol,
                                   const std::function<double(double y, double mbar, double t)>& pi,
                                   const std::vector<Probe3>& probes);
// Linear case, probes (a = x, y, t): pi(x) - theta sum_j w_j pi(x_j) - alpha*(x - theta mbar).
ResidualReport optimality_residual(const HSurface& single, double theta,
                                   const std::vector<std::pair<double, double>>& atoms,
                                   const std::function<double(double x, double y, double t)>& pi,
                                   const std::vector<Probe3>& probes);

struct Checkpoint {
    double s = 0.0;
    ValueEstimate increment;  // f(Y_s, Xbar_s, s) - f at the previous checkpoint
    std::size_t excluded = 0;
};

struct IndifferenceReport {
    double f0 = 0.0;
    ValueEstimate price;  // E_Q[C(Xbar_T)]
    std::vector<Checkpoint> checkpoints;
    std::size_t excluded = 0;
    bool price_ok = false;
    bool martingale_ok = false;
    bool ok() const { return price_ok && martingale_ok; }
};

// Under Q (Y driftless, dXbar = pi* dW^Q) E_Q[C(Xbar_T)] = f(y0, mbar0, t0), and f(Y, Xbar, s)
// has mean-zero increments at three checkpoints. Both within 3 standard errors.
IndifferenceReport indifference_price_check(const MfgSolution& sol, double y0, double mbar0, double t0,
                                            std::size_t n_paths, std::size_t n_steps, std::uint64_t seed);

struct MasterReport {
    double terminal_max = 0.0;   // max |W - J(x - C(mbar)) F(y,T)| / |J F| at terminal nodes
    double interior_max = 0.0;   // max relative |W - closed form| at interior probes
    std::size_t terminal_count = 0;
    std::size_t interior_count = 0;
};

// W = U F against the terminal condition and, at interior probes, against
// -e^{-(x - f)+k} F with f from a direct inversion of g at the probe.
MasterReport master_reduction_check(const MfgSolution& sol);

}  // namespace mfgpi
