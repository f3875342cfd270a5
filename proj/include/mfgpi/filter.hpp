#pragma once

#include <vector>

#include "mfgpi/field.hpp"

namespace mfgpi {

struct PriorAtom {
    double theta = 0.0;
    double weight = 0.0;
};

// Atomized prior on the unknown drift rate.
struct PriorMeasure {
    std::vector<PriorAtom> atoms;
    double theta_min = 0.0;
    double theta_max = 0.0;

    // Bounds default to the smallest and largest atom.
    static PriorMeasure from_atoms(std::vector<PriorAtom> atoms);
    static PriorMeasure dirac(double theta);
    void validate() const;
};

// F(y,t) = sum_i w_i exp(y theta_i - theta_i^2 t / 2), evaluated by log-sum-exp.
double eval_F(const PriorMeasure& prior, double y, double t);
double eval_log_F(const PriorMeasure& prior, double y, double t);
double eval_F_y(const PriorMeasure& prior, double y, double t);
// Posterior mean b = F_y / F.
double eval_b(const PriorMeasure& prior, double y, double t);

struct FilterSurface {
    SpaceTimeGrid grid;
    FieldSurface F;
    FieldSurface F_y;
    FieldSurface b;
};

FilterSurface build_filter_surface(const PriorMeasure& prior, const SpaceTimeGrid& grid);

}  // namespace mfgpi
