#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>

#include "mfgpi/field.hpp"

namespace mfgpi {

enum class Scheme { CrankNicolson, ImplicitEuler };

// Closure imposed at y_lo and y_hi on every implicit level.
//   ZeroSecondDerivative: v0 = 2 v1 - v2 (linear extension)
//   ZeroThirdDerivative:  v0 = 3 v1 - 3 v2 + v3 (quadratic extension)
enum class BoundaryPolicy { ZeroSecondDerivative, ZeroThirdDerivative };

using CoefFn = std::function<double(double y, double t)>;

// Terminal-value problem  v_t + 1/2 v_yy + a v_y + r v = s,  v(y,T) = terminal(y).
// Empty coefficient functions are read as zero.
struct ParabolicProblem {
    std::function<double(double)> terminal;
    CoefFn drift;
    CoefFn reaction;
    CoefFn source;
    BoundaryPolicy boundary = BoundaryPolicy::ZeroThirdDerivative;
};

FieldSurface solve_terminal_parabolic(const ParabolicProblem& problem, const SpaceTimeGrid& grid,
                                      Scheme scheme = Scheme::CrankNicolson);

// Independent solves sharing the coefficients of `problem`, one per node of
// `axis`; terminal(y, param) replaces problem.terminal.
FieldSurface solve_parabolic_family(const ParabolicProblem& problem,
                                    const std::function<double(double y, double param)>& terminal,
                                    const SpaceTimeGrid& grid, const Axis& axis,
                                    Scheme scheme = Scheme::CrankNicolson);

struct ResidualReport {
    std::string check;
    double max_abs = 0.0;
    double l2 = 0.0;  // root mean square over the probed nodes
    std::size_t count = 0;
    double y = 0.0;
    double t = 0.0;
    double param = 0.0;
    std::size_t i = 0;
    std::size_t n = 0;
    std::size_t p = 0;
    std::string grid;

    void add(double r, double y_, double t_, double param_, std::size_t i_, std::size_t n_,
             std::size_t p_);
    void finish();
    std::string node() const;

private:
    double sum_sq_ = 0.0;
};

struct YWindow {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

// Central-difference residual of the problem's operator on interior nodes.
ResidualReport fd_residual(const FieldSurface& field, const ParabolicProblem& problem,
                           YWindow window = {});

}  // namespace mfgpi
