#pragma once

#include <functional>

namespace mfgpi {

struct InvertOptions {
    double tol_rel = 1e-10;  // accept |f(x) - target| <= tol_rel * (1 + |target|)
    int max_iter = 300;
};

// Solves f(x) = target for f strictly monotone on [lo, hi] (either direction).
// Bisection keeps a bracket; Newton steps (with df) or secant steps (without)
// are taken when they stay inside it and shrink it fast enough. Iterates to
// machine resolution, then checks the tolerance.
double monotone_invert(const std::function<double(double)>& f, double target, double lo, double hi,
                       const std::function<double(double)>& df = {}, InvertOptions opts = {});

}  // namespace mfgpi
