#pragma once

#include <functional>
#include <vector>

#include "mfgpi/hsurface.hpp"
#include "mfgpi/parabolic.hpp"

namespace mfgpi {

using Field3 = std::function<double(double a, double y, double t)>;

// Probe points (a, y, t); a is wealth x or the z variable depending on the check.
struct Probe3 {
    double a = 0.0;
    double y = 0.0;
    double t = 0.0;
};

// Stencil spacings in each variable; fourth-order central differences are used.
struct Steps3 {
    double da = 1e-2;
    double dy = 1e-2;
    double dt = 1e-3;
};

// u_t - (b u_x + u_xy)^2 / (2 u_xx) + 1/2 u_yy + b u_y at each probe.
// Throws ConsistencyError if u_xx >= 0 at a probe.
ResidualReport hjb_residual(const Field3& u, const MarketModel& market, const std::vector<Probe3>& probes,
                            Steps3 steps);

// R_t + 1/2 R^2 R_xx + R R_xy + 1/2 R_yy for R = alpha*(x,y,t).
ResidualReport r_equation_residual(const Field3& R, const std::vector<Probe3>& probes, Steps3 steps);
ResidualReport r_equation_residual(const HSurface& surface, const std::vector<Probe3>& probes, Steps3 steps);

// Max |alpha*(x,y,T) - b(y,T) r(x)| over the given (x,y) pairs.
ResidualReport r_terminal_mismatch(const HSurface& surface, const std::vector<std::pair<double, double>>& xy);

// H_t + 1/2 c^2 H_zz + c H_zy + 1/2 H_yy for H(z,y,t).
ResidualReport H_pde_residual(const Field3& H, const MarketModel& market, const std::vector<Probe3>& probes,
                              Steps3 steps);

// Tensor lattice of probes.
std::vector<Probe3> probe_lattice(const std::vector<double>& a, const std::vector<double>& y,
                                  const std::vector<double>& t);

}  // namespace mfgpi
