#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mfgpi/market.hpp"
#include "mfgpi/parabolic.hpp"
#include "mfgpi/utility.hpp"

namespace mfgpi {

// Lattice for the stacked h solves: its own (y,t) grid plus the z axis.
struct HGrid {
    SpaceTimeGrid grid;
    Axis z{-8.0, 8.0, 321};
};

// Every other node of the market grid in y and t, z spacing equal to the y spacing on [-8, 8].
HGrid default_h_grid(const SpaceTimeGrid& market_grid);

enum class HRoute { Affine, ExponentialSum, Composition };

// H(z,y,t) = sum coef e^{rho z} l(y,t) with l_t + 1/2 l_yy + rho c l_y + 1/2 rho^2 c^2 l = 0, l(T) = 1.
struct ExpTerm {
    double rho = 0.0;
    double coef = 0.0;
    FieldSurface l;
    FieldSurface l_y;
};

struct HInequalityReport {
    double heat1_min_h_z = 0.0;   // min h_z
    double heat1_min_h_y = 0.0;   // min h_y
    double heat2_max_excess = 0.0;  // max of h_y - theta_max sqrt(A h^2 + B e^{A(T-t)}), scaled
    double heat3_max_excess = 0.0;  // max of |h_yz| - A h_z, scaled
    std::size_t nodes = 0;
    bool ok = true;
    std::string worst;  // description of the worst node
};

class HSurface {
public:
    UtilitySpec utility;
    std::shared_ptr<const MarketModel> market;
    UtilityConstants constants;
    HGrid hgrid;
    HRoute route = HRoute::Composition;

    // h stack on hgrid: h(z,y,T) = I(e^{-z} / F(y,T)), heat equation in (y,t) for each z.
    FieldSurface h;
    FieldSurface h_z;
    FieldSurface h_y;
    HInequalityReport inequalities;

    double affine_B = 0.0;       // Affine route: H = affine_B z
    std::vector<ExpTerm> terms;  // ExponentialSum route
    std::vector<ResidualReport> reports;

    // h and its inverse in z, read from the stack.
    double h_value(double z, double y, double t) const;
    double h_inverse(double x, double y, double t) const;
    std::pair<double, double> h_wealth_window(double y, double t) const;

    // H through the selected route.
    double H(double z, double y, double t) const;
    double H_z(double z, double y, double t) const;
    double H_y(double z, double y, double t) const;
    double H_inverse(double x, double y, double t) const;
    std::pair<double, double> z_window(double y, double t) const;
    std::pair<double, double> wealth_window(double y, double t) const;

    // H(z,y,t) = h(z - n(y,t), y, t) with derivatives by the chain rule.
    double H_composed(double z, double y, double t) const;
    double H_z_composed(double z, double y, double t) const;
    double H_y_composed(double z, double y, double t) const;
    double H_inverse_composed(double x, double y, double t) const;

    // alpha* = c H_z + H_y at the given z.
    double alpha_at_z(double z, double y, double t) const;
    // h_y at z = h^{-1}(x): the optimal control of the auxiliary problem.
    double alpha_tilde(double x, double y, double t) const;
    // Constant A used in the bounds: max(A, sup |r'|).
    double bound_A() const { return std::max(constants.A, constants.r_slope); }
};

// h part only (route Composition).
HSurface build_h_surface(const UtilitySpec& utility, std::shared_ptr<const MarketModel> market, const HGrid& hgrid);
HSurface build_h_surface(const UtilitySpec& utility, std::shared_ptr<const MarketModel> market);

// h plus the closed-form route for Exponential, Sahara and Cmim.
HSurface build_H_surface(const UtilitySpec& utility, std::shared_ptr<const MarketModel> market, const HGrid& hgrid);
HSurface build_H_surface(const UtilitySpec& utility, std::shared_ptr<const MarketModel> market);

// Optimal feedback alpha*(x,y,t) = c H_z + H_y at z = H^{-1}(x,y,t).
double feedback_control(const HSurface& surface, double x, double y, double t);

// Sahara inversion of H = (kappa/2)(e^{sz} l1 - e^{-sz} l2), s = sqrt(A), kappa = sqrt(B/A),
// by the root of kappa l1 u^2 - 2 x u - kappa l2 = 0 with u = e^{sz}.
double sahara_inverse_quadratic(double x, double l1, double l2, double A, double B);

// Value surface through K(z,y,t) = E_Q[J(h(z,Y_T,T)) F(Y_T,T)], a heat solve for each z:
// u(x,y,t) = K(h^{-1}(x,y,t), y, t) / F(y,t).
struct ValueSurface {
    const HSurface* surface = nullptr;
    FieldSurface K;
    double w(double x, double y, double t) const;
    double u(double x, double y, double t) const;
};

ValueSurface build_value_surface(const HSurface& surface);

}  // namespace mfgpi
